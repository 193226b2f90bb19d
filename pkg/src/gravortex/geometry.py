"""Spectral discretization of the round sphere and conformal metrics.

Axisymmetric fields on the sphere are smooth functions of the height
coordinate s = (|w|^2 - 1)/(|w|^2 + 1) of the affine coordinate w, so
Chebyshev collocation on Gauss--Lobatto nodes in s gives spectral accuracy
and the poles s = +-1 need no special treatment.

Conventions (see CONVENTIONS.md for the full ledger):

* background Kaehler form ``omega_FS = i dw dwbar / (1+|w|^2)^2`` with
  total area 2*pi; in (s, theta) coordinates ``omega_FS = ds dtheta / 2``;
* a conformal metric is ``omega = exp(2u) omega_FS`` with u = u(s);
* the Laplacian is ``Delta = 2i Lambda dbar d``, which on functions equals
  minus the Laplace--Beltrami operator, so its spectrum is nonnegative and
  ``Delta s = 4 s`` on the round metric;
* the scalar curvature of the round volume-2*pi metric is the constant 4,
  and Gauss--Bonnet reads ``integral S omega = 8*pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericInputError

ROUND_VOLUME = 2.0 * math.pi
GAUSS_BONNET_TOTAL = 8.0 * math.pi
ROUND_SCALAR_CURVATURE = 4.0

MIN_NODES = 33
MAX_NODES = 4097


def _check_finite(f: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(f)):
        raise NumericInputError(f"{name} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class AxisymGrid:
    """Chebyshev--Gauss--Lobatto collocation grid on s in [-1, 1].

    ``d1`` differentiates the degree n-1 interpolant exactly; ``d2`` is the
    composition d1 @ d1.  ``weights`` are Clenshaw--Curtis weights matched
    to the nodes (exact for polynomials of degree <= n-1, summing to 2).
    """

    n: int
    nodes: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    weights: np.ndarray
    bary: np.ndarray = field(repr=False)  # barycentric weights of the node set

    @property
    def lap_fs(self) -> np.ndarray:
        """Round-metric Laplacian in divergence form, -2 d1 (1-s^2) d1."""
        cached = getattr(self, "_lap_fs", None)
        if cached is None:
            cached = -2.0 * (self.d1 @ ((1.0 - self.nodes**2)[:, None] * self.d1))
            object.__setattr__(self, "_lap_fs", cached)
        return cached

    def interpolate(self, values: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Barycentric evaluation of the nodal interpolant at new points."""
        return barycentric_interpolate(self.nodes, self.bary, values, targets)


def build_grid(n: int) -> AxisymGrid:
    """Build the collocation grid, derivative operators and quadrature weights.

    Deterministic for fixed n.  Raises ConfigurationError unless n is an odd
    integer with 33 <= n <= 4097 (odd keeps s = 0 on the grid, which parity
    arguments rely on).
    """
    if not isinstance(n, (int, np.integer)):
        raise ConfigurationError(f"node count must be an integer, got {n!r}")
    if n % 2 == 0:
        raise ConfigurationError(f"node count must be odd, got n={n}")
    if not (MIN_NODES <= n <= MAX_NODES):
        raise ConfigurationError(
            f"node count must satisfy {MIN_NODES} <= n <= {MAX_NODES}, got n={n}"
        )
    m = n - 1
    j = np.arange(n)
    # sin form keeps the node set exactly symmetric in floating point
    s = np.sin(np.pi * (2 * j - m) / (2 * m))
    bary = np.ones(n)
    bary[0] = bary[-1] = 0.5
    bary *= (-1.0) ** j

    dx = s[:, None] - s[None, :]
    np.fill_diagonal(dx, 1.0)
    d1 = (bary[None, :] / bary[:, None]) / dx
    np.fill_diagonal(d1, 0.0)
    np.fill_diagonal(d1, -d1.sum(axis=1))  # rows sum to zero: d1 @ const == 0
    # second pass absorbs the round-off of the first row sums
    np.fill_diagonal(d1, d1.diagonal() - d1 @ np.ones(n))

    k = np.arange(1, m // 2 + 1)
    b = np.where(2 * k == m, 1.0, 2.0)
    theta = np.pi * j / m
    terms = -(b / (4.0 * k * k - 1.0))[None, :] * np.cos(
        2.0 * np.outer(theta, k)
    )
    weights = np.empty(n)
    for i in range(n):
        c = 1.0 if i in (0, m) else 2.0
        weights[i] = c * math.fsum([1.0, *terms[i].tolist()]) / m

    return AxisymGrid(n=n, nodes=s, d1=d1, d2=d1 @ d1, weights=weights, bary=bary)


def barycentric_interpolate(
    nodes: np.ndarray, bary: np.ndarray, values: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    out = np.empty_like(targets)
    for i, t in enumerate(targets):
        hit = np.nonzero(nodes == t)[0]
        if hit.size:
            out[i] = values[hit[0]]
            continue
        r = bary / (t - nodes)
        out[i] = np.dot(r, values) / r.sum()
    return out


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    """Log-conformal factor u defining omega = exp(2u) omega_FS.

    Instances produced by :func:`normalize_volume` satisfy
    ``integral exp(2u) omega_FS = vol_target`` to round-off.
    """

    u: np.ndarray
    vol_target: float = ROUND_VOLUME


def round_metric(grid: AxisymGrid) -> ConformalMetric:
    return ConformalMetric(u=np.zeros(grid.n))


def _u_of(metric: ConformalMetric | None, n: int) -> np.ndarray:
    if metric is None:
        return np.zeros(n)
    return metric.u


def integrate(grid: AxisymGrid, metric: ConformalMetric | None, f: np.ndarray) -> float:
    """Integral of f against omega = exp(2u) omega_FS.

    Uses exact compensated summation (math.fsum) so the result does not
    depend on accumulation order.
    """
    f = np.asarray(f, dtype=float)
    _check_finite(f, "integrand")
    u = _u_of(metric, grid.n)
    contrib = np.pi * grid.weights * f * np.exp(2.0 * u)
    return math.fsum(contrib.tolist())


def volume(grid: AxisymGrid, metric: ConformalMetric | None) -> float:
    return integrate(grid, metric, np.ones(grid.n))


def normalize_volume(
    grid: AxisymGrid, u_raw: np.ndarray, vol_target: float = ROUND_VOLUME
) -> ConformalMetric:
    """Shift u_raw by the constant making the conformal volume vol_target.

    Idempotent: normalizing an already normalized potential changes nothing.
    """
    u_raw = np.asarray(u_raw, dtype=float)
    _check_finite(u_raw, "u_raw")
    vol = math.fsum((np.pi * grid.weights * np.exp(2.0 * u_raw)).tolist())
    shift = 0.5 * math.log(vol / vol_target)
    return ConformalMetric(u=u_raw - shift, vol_target=vol_target)


def laplacian(
    grid: AxisymGrid, metric: ConformalMetric | None, f: np.ndarray
) -> np.ndarray:
    """Apply Delta_omega = exp(-2u) Delta_FS to a grid scalar.

    Positive convention: Delta_omega has nonnegative spectrum, and the round
    Laplacian satisfies Delta_FS s = 4 s.
    """
    f = np.asarray(f, dtype=float)
    _check_finite(f, "laplacian input")
    u = _u_of(metric, grid.n)
    return np.exp(-2.0 * u) * (grid.lap_fs @ f)


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    s_field: np.ndarray
    total: float
    mean: float


def scalar_curvature(grid: AxisymGrid, metric: ConformalMetric) -> CurvatureReport:
    """Scalar curvature of omega = exp(2u) omega_FS.

    Conformal rule under the positive Laplacian convention:
    ``S = exp(-2u) (4 + 2 Delta_FS u)``.  The total is Gauss--Bonnet 8*pi up
    to quadrature error for any smooth u.
    """
    u = metric.u
    _check_finite(u, "metric potential")
    s_field = np.exp(-2.0 * u) * (ROUND_SCALAR_CURVATURE + 2.0 * (grid.lap_fs @ u))
    total = integrate(grid, metric, s_field)
    vol = volume(grid, metric)
    return CurvatureReport(s_field=s_field, total=total, mean=total / vol)


def cumulative_antiderivative(grid: AxisymGrid, f: np.ndarray) -> np.ndarray:
    """Antiderivative of the nodal interpolant of f, pinned to 0 at s = -1.

    Solves d1 g = f with the first row replaced by the pinning condition;
    exact for polynomial f of degree <= n-2.
    """
    f = np.asarray(f, dtype=float)
    _check_finite(f, "antiderivative input")
    a = grid.d1.copy()
    rhs = f.copy()
    a[0, :] = 0.0
    a[0, 0] = 1.0
    rhs[0] = 0.0
    return np.linalg.solve(a, rhs)


def hamiltonian_potential(grid: AxisymGrid, metric: ConformalMetric | None) -> np.ndarray:
    """Mean-normalized Hamiltonian potential of the standard circle action.

    The rotation field has momentum h with h'(s) = exp(2u)/2 against
    omega = exp(2u) omega_FS; the additive constant is fixed by
    ``integral h omega = 0``.  On the round metric h = s/2.
    """
    u = _u_of(metric, grid.n)
    h = cumulative_antiderivative(grid, 0.5 * np.exp(2.0 * u))
    h_mean = integrate(grid, metric, h) / volume(grid, metric)
    return h - h_mean


def write_profile_csv(path, s: np.ndarray, values: np.ndarray, header: str = "s,value") -> None:
    """Write a (s, value) profile with 17 significant digits per entry."""
    lines = [header]
    for si, vi in zip(s, values):
        lines.append(f"{si:.17g},{vi:.17g}")
    text = "\n".join(lines) + "\n"
    from .reporting import atomic_write_text

    atomic_write_text(path, text)
