"""Abelian vortex residual and Newton solver; rank-2 residual evaluation.

The bundle-metric unknown is the globally smooth relative potential v
against the Fubini--Study background, H = H_FS exp(2v); zeros of the Higgs
field live in the background, so the solver works on smooth data.

Abelian residual (volume-2*pi conventions, positive Laplacian):

    R1 = N exp(-2u) + Delta_omega v + (exp(2v) |phi|^2_FS - tau) / 2.

Chern invariance ``integral (i Lambda F) omega = 2 pi N`` holds for every
(u, v), and the v-linearization Delta_omega + exp(2v)|phi|^2_FS is positive
semi-definite with strict positivity wherever phi does not vanish, which is
the monotone structure that makes the damped Newton iteration reliable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundles import HiggsConfig, higgs_profile
from .errors import ConfigurationError, InfeasibleError, NumericInputError
from .geometry import (
    AxisymGrid,
    ConformalMetric,
    integrate,
    round_metric,
)


@dataclass(frozen=True, eq=False)
class BundleMetricPotential:
    """Smooth relative potential v defining H = H_FS exp(2v)."""

    v: np.ndarray


@dataclass
class NewtonOptions:
    tolerance: float = 1e-10
    max_iter: int = 50
    max_halvings: int = 30

    def __post_init__(self):
        if not (self.tolerance > 0):
            raise ConfigurationError("tolerance must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_sup: float
    resolution: int
    diagnostics: list[float] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_sup": self.residual_sup,
            "resolution": self.resolution,
            "residual_history": list(self.diagnostics),
        }


def bundle_curvature(
    grid: AxisymGrid, metric: ConformalMetric | None, degree: int, v: np.ndarray
) -> np.ndarray:
    """i Lambda_omega F_H for H = H_FS exp(2v) on the degree-N bundle."""
    u = metric.u if metric is not None else np.zeros(grid.n)
    return np.exp(-2.0 * u) * (degree + grid.lap_fs @ v)


def vortex_residual(
    grid: AxisymGrid,
    metric: ConformalMetric | None,
    pot: BundleMetricPotential,
    config: HiggsConfig,
) -> np.ndarray:
    """Residual of the abelian vortex equation at fixed Kaehler metric."""
    config.require_abelian("vortex_residual")
    v = np.asarray(pot.v, dtype=float)
    if v.shape != (grid.n,):
        raise ConfigurationError("potential resolution does not match the grid")
    if not np.all(np.isfinite(v)):
        raise NumericInputError("bundle potential contains non-finite entries")
    profile = higgs_profile(grid, config, 0)
    curv = bundle_curvature(grid, metric, config.degrees[0], v)
    return curv + 0.5 * (np.exp(2.0 * v) * profile - float(config.tau))


def check_vortex_window(config: HiggsConfig) -> None:
    """Strict solvability window N < tau/2; the boundary is infeasible."""
    n_deg = config.degrees[0]
    if not (config.tau_fraction > 2 * n_deg):
        raise InfeasibleError(
            f"vortex equation requires N < tau/2; got N={n_deg}, tau={config.tau}"
        )


def solve_vortex(
    grid: AxisymGrid,
    metric: ConformalMetric | None,
    config: HiggsConfig,
    options: NewtonOptions | None = None,
    v0: np.ndarray | None = None,
) -> tuple[BundleMetricPotential, SolveReport]:
    """Damped Newton iteration for the abelian vortex equation.

    The solution is unique, so the converged result does not depend on the
    initial guess.  Stagnation (no decrease found along the halved step)
    ends the iteration with converged=False; the report is never silently
    wrong.
    """
    config.require_abelian("solve_vortex")
    check_vortex_window(config)
    opts = options or NewtonOptions()
    if metric is None:
        metric = round_metric(grid)
    profile = higgs_profile(grid, config, 0)
    tau = float(config.tau)
    n_deg = config.degrees[0]
    emu = np.exp(-2.0 * metric.u)
    lap = emu[:, None] * grid.lap_fs

    v = np.zeros(grid.n) if v0 is None else np.asarray(v0, dtype=float).copy()
    if not np.all(np.isfinite(v)):
        raise NumericInputError("initial guess contains non-finite entries")

    def residual(vv: np.ndarray) -> np.ndarray:
        return n_deg * emu + lap @ vv + 0.5 * (np.exp(2.0 * vv) * profile - tau)

    history: list[float] = []
    res = residual(v)
    sup = float(np.max(np.abs(res)))
    history.append(sup)
    converged = sup < opts.tolerance
    iterations = 0
    while not converged and iterations < opts.max_iter:
        jac = lap + np.diag(np.exp(2.0 * v) * profile)
        step = np.linalg.solve(jac, -res)
        lam, improved = 1.0, False
        for _ in range(opts.max_halvings):
            trial = v + lam * step
            trial_res = residual(trial)
            trial_sup = float(np.max(np.abs(trial_res)))
            if trial_sup < sup:
                improved = True
                break
            lam *= 0.5
        if not improved:
            break  # stagnation at the round-off floor
        v, res, sup = trial, trial_res, trial_sup
        iterations += 1
        history.append(sup)
        converged = sup < opts.tolerance

    report = SolveReport(
        converged=converged,
        iterations=iterations,
        residual_sup=sup,
        resolution=grid.n,
        diagnostics=history,
    )
    return BundleMetricPotential(v=v), report


# ---------------------------------------------------------------------------
# rank-2 residual evaluation (no solving; the coupled non-abelian Newton
# problem is out of scope by design)


@dataclass(frozen=True, eq=False)
class NonabelianMetric:
    """Circle-equivariant Hermitian data on O(N1) + O(N2).

    In the background-unitary frame the metric is the bounded matrix

        Hhat = [[exp(2 v1), beta_offdiag-phase], [conj, exp(2 v2)]],

    where the off-diagonal entry carries Fourier weight l1 - l2 and modulus
    (1-s^2)^(|weight|/2) * offdiag_cofactor(s).  The smooth cofactor is the
    stored quantity; the physical modulus is recovered by
    :meth:`offdiag_modulus`.  Positivity requires
    modulus^2 < exp(2 v1 + 2 v2) pointwise.
    """

    v1: np.ndarray
    v2: np.ndarray
    offdiag_cofactor: np.ndarray | None = None

    def offdiag_modulus(self, grid: AxisymGrid, weight: int) -> np.ndarray:
        if self.offdiag_cofactor is None:
            return np.zeros(grid.n)
        q2 = 1.0 - grid.nodes**2
        return self.offdiag_cofactor * q2 ** (abs(weight) / 2.0)


@dataclass
class TraceReport:
    """Integrated trace of the rank-2 residual against its closed form.

    integral tr(residual) omega = 2 pi (N1+N2) + (1/2) integral |phi|^2_H
    omega - 2 pi tau.
    """

    lhs: float
    rhs: float
    defect: float
    chern_total: float


@dataclass(eq=False)
class NonabelianResidual:
    """Rank-2 Hermitian residual field in an H-unitary frame.

    ``offdiag`` is the (1,2) entry's profile on the phase section theta = 0;
    the full entry is offdiag * exp(i * offdiag_weight * theta).  The
    off-diagonal part of phi (x) phi* is reported, never hidden: with a
    diagonal metric it is (1/2) phi_1 conj(phi_2) and generically nonzero.
    """

    r11: np.ndarray
    r22: np.ndarray
    offdiag: np.ndarray
    offdiag_weight: int
    trace: TraceReport


class _EqField:
    """S^1-equivariant profile: value = (1-s^2)^(|weight|/2) cof(s) e^(i w theta)."""

    __slots__ = ("weight", "cof")

    def __init__(self, weight: int, cof: np.ndarray):
        self.weight = weight
        self.cof = cof


class _EqChart:
    """Affine-chart del / delbar calculus on smooth equivariant cofactors.

    Valid for metrics whose off-diagonal entry vanishes at both poles to the
    order |weight|/2 (equal degrees); results lose accuracy only near the
    pole s = +1 of the chart, which the caller discards by stitching with
    the mirrored chart.
    """

    def __init__(self, grid: AxisymGrid):
        self.grid = grid
        s = grid.nodes
        self.s = s
        self.q2 = 1.0 - s * s
        self.one_minus = 1.0 - s

    def mul(self, a: _EqField, b: _EqField) -> _EqField:
        p = (abs(a.weight) + abs(b.weight) - abs(a.weight + b.weight)) // 2
        return _EqField(a.weight + b.weight, a.cof * b.cof * self.q2**p)

    def add(self, a: _EqField, b: _EqField) -> _EqField:
        if a.weight != b.weight:
            raise ValueError("cannot add equivariant fields of different weights")
        return _EqField(a.weight, a.cof + b.cof)

    def dw(self, a: _EqField) -> _EqField:
        k, f = a.weight, a.cof
        df = self.grid.d1 @ f
        if k >= 1:
            cof = 0.5 * self.one_minus * (self.q2 * df + k * self.one_minus * f)
        else:
            cof = 0.5 * (self.one_minus * df + k * f)
        return _EqField(k - 1, cof)

    def dwbar(self, a: _EqField) -> _EqField:
        k, f = a.weight, a.cof
        df = self.grid.d1 @ f
        if k >= 0:
            cof = 0.5 * (self.one_minus * df - k * f)
        else:
            cof = 0.5 * self.one_minus * (self.q2 * df - k * self.one_minus * f)
        return _EqField(k + 1, cof)

    def fix_top(self, f: np.ndarray) -> np.ndarray:
        """Replace the s=+1 endpoint value by barycentric extrapolation."""
        out = f.copy()
        grid = self.grid
        idx = np.arange(0, grid.n - 1)
        wts = grid.bary[idx] / (grid.nodes[-1] - grid.nodes[idx])
        out[-1] = np.dot(wts, f[idx]) / wts.sum()
        return out


def _chart_curvature(
    grid: AxisymGrid,
    degrees: tuple[int, int],
    weight: int,
    u: np.ndarray,
    v1: np.ndarray,
    v2: np.ndarray,
    offdiag_cof: np.ndarray,
):
    """i Lambda_omega F_H entry profiles in this chart's hat frame.

    Returns cofactor arrays (L11, L22, L12, L21) with the weight pattern
    [[0, weight], [-weight, 0]]; accuracy degrades near s=+1 only.
    """
    ch = _EqChart(grid)
    n1, n2 = degrees
    k = weight
    h11 = _EqField(0, np.exp(2.0 * v1))
    h22 = _EqField(0, np.exp(2.0 * v2))
    b12 = _EqField(k, offdiag_cof)
    b21 = _EqField(-k, offdiag_cof)
    det = h11.cof * h22.cof - ch.q2 ** abs(k) * offdiag_cof**2
    hi11 = _EqField(0, h22.cof / det)
    hi22 = _EqField(0, h11.cof / det)
    hi12 = _EqField(k, -offdiag_cof / det)
    hi21 = _EqField(-k, -offdiag_cof / det)
    # W = d(log of background frame norm), diagonal with cofactor -N/4
    w1 = _EqField(-1, -(n1 / 4.0) * np.ones(grid.n))
    w2 = _EqField(-1, -(n2 / 4.0) * np.ones(grid.n))

    dh11, dh22 = ch.dw(h11), ch.dw(h22)
    db12, db21 = ch.dw(b12), ch.dw(b21)
    # commutator [W, Hhat] has only off-diagonal entries
    c12 = ch.mul(_EqField(-1, w1.cof - w2.cof), b12)
    c21 = ch.mul(_EqField(-1, w2.cof - w1.cof), b21)
    t12 = ch.add(c12, db12)
    t21 = ch.add(c21, db21)
    x11 = ch.add(ch.mul(hi11, dh11), ch.mul(hi12, t21))
    x12 = ch.add(ch.mul(hi11, t12), ch.mul(hi12, dh22))
    x21 = ch.add(ch.mul(hi21, dh11), ch.mul(hi22, t21))
    x22 = ch.add(ch.mul(hi21, t12), ch.mul(hi22, dh22))
    dw1, dw2 = ch.dwbar(w1), ch.dwbar(w2)
    k12 = ch.mul(x12, _EqField(1, w2.cof - w1.cof))
    k21 = ch.mul(x21, _EqField(1, w1.cof - w2.cof))
    f11 = ch.add(ch.dwbar(x11), _EqField(0, 2.0 * dw1.cof))
    f22 = ch.add(ch.dwbar(x22), _EqField(0, 2.0 * dw2.cof))
    f12 = ch.add(ch.dwbar(x12), k12)
    f21 = ch.add(ch.dwbar(x21), k21)

    g_omega = np.exp(2.0 * u) * (ch.one_minus / 2.0) ** 2  # vanishes at s=+1
    out = []
    for fld in (f11, f22, f12, f21):
        ratio = np.zeros(grid.n)
        ratio[:-1] = -fld.cof[:-1] / g_omega[:-1]
        out.append(ch.fix_top(ratio))
    return out


def _stitched_curvature(grid: AxisymGrid, config: HiggsConfig, u, v1, v2, offdiag_cof):
    """Two-chart evaluation: each chart is authoritative away from its bad pole."""
    n1, n2 = config.degrees
    l1, l2 = config.exponents
    k = (l1 - l2) if (l1 is not None and l2 is not None) else 0
    a11, a22, a12, a21 = _chart_curvature(grid, (n1, n2), k, u, v1, v2, offdiag_cof)
    mirror = slice(None, None, -1)
    b11, b22, b12, b21 = _chart_curvature(
        grid,
        (n1, n2),
        -k,
        u[mirror],
        v1[mirror],
        v2[mirror],
        offdiag_cof[mirror],
    )
    mask = grid.nodes < 0.0
    stitch = lambda a, b: np.where(mask, a, b[mirror])
    return stitch(a11, b11), stitch(a22, b22), stitch(a12, b12), stitch(a21, b21)


def nonabelian_residual(
    grid: AxisymGrid,
    metric: ConformalMetric | None,
    hdata: NonabelianMetric,
    config: HiggsConfig,
) -> NonabelianResidual:
    """Residual of the rank-2 vortex equation, evaluated (not solved).

    i Lambda_omega F_H + (1/2) phi (x) phi^*H - (tau/2) Id, reported in the
    H-unitary frame, plus the integrated trace identity.  For a diagonal
    metric the diagonal entries are the two scalar residuals
    i Lambda F_{H_j} + |phi_j|^2_{H_j}/2 - tau/2 and the off-diagonal entry
    is (1/2) phi_1 conj(phi_2) in unitary-frame norms.
    """
    config.require_rank2("nonabelian_residual")
    n1, n2 = config.degrees
    l1, l2 = config.exponents
    weight = (l1 - l2) if (l1 is not None and l2 is not None) else 0
    tau = float(config.tau)
    if metric is None:
        metric = round_metric(grid)
    u = metric.u
    v1 = np.asarray(hdata.v1, dtype=float)
    v2 = np.asarray(hdata.v2, dtype=float)
    for name, arr in (("v1", v1), ("v2", v2)):
        if arr.shape != (grid.n,):
            raise ConfigurationError(f"{name} resolution does not match the grid")
        if not np.all(np.isfinite(arr)):
            raise NumericInputError(f"{name} contains non-finite entries")
    off = hdata.offdiag_cofactor
    has_off = off is not None and bool(np.any(np.asarray(off) != 0.0))
    if has_off and n1 != n2:
        raise ConfigurationError(
            "off-diagonal metric profiles are supported only for equal degrees: "
            "the single equivariant profile class assumes the same vanishing "
            "order at both poles"
        )

    q2 = 1.0 - grid.nodes**2
    if has_off:
        off = np.asarray(off, dtype=float)
        off_mod = off * q2 ** (abs(weight) / 2.0)
        if np.any(off_mod**2 >= np.exp(2 * v1 + 2 * v2)):
            raise ConfigurationError("off-diagonal profile violates positivity")
        curv11, curv22, curv12, curv21 = _stitched_curvature(grid, config, u, v1, v2, off)
    else:
        curv11 = bundle_curvature(grid, metric, n1, v1)
        curv22 = bundle_curvature(grid, metric, n2, v2)
        curv12 = np.zeros(grid.n)
        curv21 = np.zeros(grid.n)
        off_mod = np.zeros(grid.n)

    # phi in the background-unitary frame: |phihat_j| = FS pointwise norm
    p1 = np.sqrt(higgs_profile(grid, config, 0))
    p2 = np.sqrt(higgs_profile(grid, config, 1))
    # phi (x) phi^*H = phihat phihat^dagger Hhat, evaluated on theta = 0
    hh = np.array([[np.exp(2 * v1), off_mod], [off_mod, np.exp(2 * v2)]])
    pp = np.array([[p1 * p1, p1 * p2], [p2 * p1, p2 * p2]])
    phih = np.einsum("ik...,kj...->ij...", pp, hh)

    m11 = curv11 + 0.5 * phih[0, 0] - 0.5 * tau
    m22 = curv22 + 0.5 * phih[1, 1] - 0.5 * tau
    m12 = curv12 + 0.5 * phih[0, 1]
    m21 = curv21 + 0.5 * phih[1, 0]

    # H-unitary frame: conjugate by the pointwise Cholesky factor of Hhat
    r11 = np.empty(grid.n)
    r22 = np.empty(grid.n)
    r12 = np.empty(grid.n)
    for i in range(grid.n):
        hmat = np.array([[hh[0, 0][i], hh[0, 1][i]], [hh[1, 0][i], hh[1, 1][i]]])
        mmat = np.array([[m11[i], m12[i]], [m21[i], m22[i]]])
        upper = np.linalg.cholesky(hmat).T
        muni = upper @ mmat @ np.linalg.inv(upper)
        r11[i], r22[i], r12[i] = muni[0, 0], muni[1, 1], muni[0, 1]

    phi_sq = phih[0, 0] + phih[1, 1]
    chern = integrate(grid, metric, curv11 + curv22)
    lhs = integrate(grid, metric, r11 + r22)
    rhs = (
        2.0 * math.pi * (n1 + n2)
        + 0.5 * integrate(grid, metric, phi_sq)
        - 2.0 * math.pi * tau
    )
    trace = TraceReport(lhs=lhs, rhs=rhs, defect=abs(lhs - rhs), chern_total=chern)
    return NonabelianResidual(
        r11=r11, r22=r22, offdiag=r12, offdiag_weight=weight, trace=trace
    )
