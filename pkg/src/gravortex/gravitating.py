"""Coupled metric + bundle solver for the gravitating vortex system.

Unknowns are the conformal potential u and the bundle potential v, with

    R1 = N exp(-2u) + Delta_omega v + (|phi|^2_H - tau) / 2,
    R2 = S_omega + alpha (Delta_omega + tau)(|phi|^2_H - tau) - c,

where |phi|^2_H = exp(2v) |phi|^2_FS.  The constant c is an output: the
residual reported to callers is mean-projected (c_est is the omega-mean of
the left side of R2), while the Newton iteration carries c as an explicit
unknown paired with the volume-normalization constraint row, which is the
same projection written as a square system.

Under the package conventions (round scalar curvature 4, volume 2*pi)
integrating the system gives the topological value c = 4 - 2 alpha tau N;
a common alternative curvature normalization yields 2 - 2 alpha tau N.
Reports carry both predictions and never silently reconcile them.

Symmetric configurations (2l = N) are solved on the even-parity subspace:
the sphere's dilation automorphisms generate an odd null direction of the
coupled linearization (a one-parameter family of pulled-back solutions),
and parity reduction removes it exactly.  Asymmetric two-point
configurations keep the full-space iteration and report honestly if it
stalls on that gauge degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundles import HiggsConfig, higgs_profile, single_zero_reason
from .errors import ConfigurationError, ObstructionError
from .geometry import (
    AxisymGrid,
    ConformalMetric,
    ROUND_VOLUME,
    integrate,
    laplacian,
    scalar_curvature,
    volume,
)
from .vortex import (
    BundleMetricPotential,
    NewtonOptions,
    SolveReport,
    bundle_curvature,
    check_vortex_window,
    vortex_residual,
)

QUOTED_C_COEFF = 2.0  # commonly quoted topological constant: 2 - 2 alpha tau N
CONVENTION_C_COEFF = 4.0  # value forced by the package curvature conventions


@dataclass(frozen=True, eq=False)
class GravitatingState:
    """A (metric, bundle metric) pair with its coupling and constant."""

    metric: ConformalMetric
    bundle: BundleMetricPotential
    c_value: float
    alpha: float


@dataclass
class ContinuationSchedule:
    """Increasing coupling values starting at 0, plus Newton options."""

    alphas: tuple[float, ...]
    newton: NewtonOptions = field(default_factory=lambda: NewtonOptions(tolerance=1e-10))

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or alphas[0] != 0.0:
            raise ConfigurationError("continuation schedule must start at alpha = 0")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ConfigurationError("continuation schedule must be strictly increasing")
        self.alphas = alphas


@dataclass
class ContinuationStep:
    alpha: float
    converged: bool
    iterations: int
    residual_sup: float
    c_est: float
    u: np.ndarray | None = None  # accepted profiles, for CSV export
    v: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_sup": self.residual_sup,
            "c_est": self.c_est,
        }


@dataclass
class ContinuationReport:
    converged: bool
    steps: list[ContinuationStep]
    resolution: int

    def to_json_dict(self) -> dict:
        return {
            "converged": self.converged,
            "resolution": self.resolution,
            "steps": [s.to_json_dict() for s in self.steps],
        }

    def final_solve_report(self) -> SolveReport:
        last = self.steps[-1]
        return SolveReport(
            converged=self.converged,
            iterations=sum(s.iterations for s in self.steps),
            residual_sup=last.residual_sup,
            resolution=self.resolution,
            diagnostics=[s.residual_sup for s in self.steps],
        )


def gravitating_residual(
    grid: AxisymGrid, state: GravitatingState, config: HiggsConfig
) -> tuple[np.ndarray, np.ndarray, float]:
    """(R1, R2, c_est) at the given state; R2 has zero omega-mean by construction."""
    config.require_abelian("gravitating_residual")
    r1 = vortex_residual(grid, state.metric, state.bundle, config)
    profile = higgs_profile(grid, config, 0)
    tau = float(config.tau)
    alpha = float(state.alpha)
    phi_sq = np.exp(2.0 * state.bundle.v) * profile
    curv = scalar_curvature(grid, state.metric)
    # Delta of the constant -tau is dropped exactly, not numerically
    full = curv.s_field + alpha * (
        laplacian(grid, state.metric, phi_sq) + tau * (phi_sq - tau)
    )
    c_est = integrate(grid, state.metric, full) / volume(grid, state.metric)
    return r1, full - c_est, c_est


def c_from_integral_identity(
    grid: AxisymGrid, state: GravitatingState, config: HiggsConfig
) -> float:
    """Constant forced by integrating the curvature equation against omega.

    c * Vol = integral S omega + alpha tau (integral |phi|^2_H omega
    - tau Vol); it agrees with the mean projection up to the quadrature
    defect of the exact-divergence term.
    """
    tau = float(config.tau)
    curv = scalar_curvature(grid, state.metric)
    phi_sq = np.exp(2.0 * state.bundle.v) * higgs_profile(grid, config, 0)
    vol = volume(grid, state.metric)
    total = curv.total + float(state.alpha) * tau * (
        integrate(grid, state.metric, phi_sq) - tau * vol
    )
    return total / vol


def c_predictions(config: HiggsConfig, alpha: float) -> dict:
    """Both topological predictions for c, plus the zero-constant products.

    The quoted normalization gives c = 2 - 2 alpha tau N (so alpha tau N = 1
    at c = 0); the package conventions give c = 4 - 2 alpha tau N (so
    alpha tau N = 2).  Reports compare, they do not reconcile.
    """
    atn = float(alpha) * float(config.tau) * sum(config.degrees)
    return {
        "quoted": QUOTED_C_COEFF - 2.0 * atn,
        "conventions": CONVENTION_C_COEFF - 2.0 * atn,
        "alpha_tau_N": atn,
        "alpha_tau_N_at_zero_constant": {
            "quoted": QUOTED_C_COEFF / 2.0,
            "conventions": CONVENTION_C_COEFF / 2.0,
        },
    }


class _ParityBasis:
    """Embedding of even grid functions; identity when symmetry is off."""

    def __init__(self, grid: AxisymGrid, even: bool):
        n = grid.n
        self.even = even
        if not even:
            self.dim = n
            self.prolong = np.eye(n)
            self.restrict = np.eye(n)
            return
        half = (n + 1) // 2
        self.dim = half
        prolong = np.zeros((n, half))
        for i in range(n):
            prolong[i, max(i, n - 1 - i) - (half - 1)] = 1.0
        restrict = np.zeros((half, n))
        for j in range(half):
            i = j + half - 1
            mirror = n - 1 - i
            if i == mirror:
                restrict[j, i] = 1.0
            else:
                restrict[j, i] = 0.5
                restrict[j, mirror] = 0.5
        self.prolong = prolong
        self.restrict = restrict


def _is_symmetric(config: HiggsConfig) -> bool:
    ell = config.exponents[0]
    return ell is not None and 2 * ell == config.degrees[0]


_DEFLATION_DIM_LIMIT = 1200
_SINGULAR_RATIO = 1e-8


def _gauge_aware_step(jr: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Newton step that stays well-posed when the linearization degenerates.

    At the zero-constant coupling the solution is non-isolated (a
    concentration family), so the Jacobian acquires an exact null
    direction.  A bordered solve pinned to the singular pair restores
    quadratic convergence on the solution slice; away from degeneracy this
    reduces to the plain dense solve.
    """
    m = jr.shape[0]
    if m > _DEFLATION_DIM_LIMIT:
        try:
            step = np.linalg.solve(jr, rhs)
            if np.all(np.isfinite(step)):
                return step
        except np.linalg.LinAlgError:
            pass
        return np.linalg.lstsq(jr, rhs, rcond=None)[0]
    left, sing, right_t = np.linalg.svd(jr)
    if sing[-1] >= _SINGULAR_RATIO * sing[0]:
        return right_t.T @ ((left.T @ rhs) / sing)
    bordered = np.zeros((m + 1, m + 1))
    bordered[:m, :m] = jr
    bordered[:m, m] = left[:, -1]
    bordered[m, :m] = right_t[-1, :]
    return np.linalg.solve(bordered, np.concatenate([rhs, [0.0]]))[:m]


def _coupled_newton(
    grid: AxisymGrid,
    config: HiggsConfig,
    alpha: float,
    u0: np.ndarray,
    v0: np.ndarray,
    c0: float,
    opts: NewtonOptions,
    symmetric: bool,
):
    """Damped Newton on (u, v, c) with the volume row; optional parity reduction."""
    n = grid.n
    lap = grid.lap_fs
    w = grid.weights
    profile = higgs_profile(grid, config, 0)
    tau = float(config.tau)
    n_deg = config.degrees[0]
    basis = _ParityBasis(grid, symmetric)
    em, re = basis.prolong, basis.restrict
    dim = basis.dim

    def full_residual(u, v, c):
        emu = np.exp(-2.0 * u)
        phih = np.exp(2.0 * v) * profile
        s_field = emu * (4.0 + 2.0 * (lap @ u))
        r1 = n_deg * emu + emu * (lap @ v) + 0.5 * (phih - tau)
        r2 = s_field + alpha * (emu * (lap @ phih) + tau * (phih - tau)) - c
        r3 = math.fsum((np.pi * w * np.exp(2.0 * u)).tolist()) - ROUND_VOLUME
        return r1, r2, r3

    def unpack(x):
        return em @ x[:dim], em @ x[dim : 2 * dim], x[2 * dim]

    def sup_norm(x):
        r1, r2, r3 = full_residual(*unpack(x))
        return max(float(np.abs(r1).max()), float(np.abs(r2).max()), abs(r3))

    x = np.concatenate([re @ u0, re @ v0, [c0]])
    history = [sup_norm(x)]
    converged = history[-1] < opts.tolerance
    iterations = 0
    while not converged and iterations < opts.max_iter:
        u, v, c = unpack(x)
        emu = np.exp(-2.0 * u)
        phih = np.exp(2.0 * v) * profile
        s_field = emu * (4.0 + 2.0 * (lap @ u))
        r1, r2, r3 = full_residual(u, v, c)
        jac = np.zeros((2 * n + 1, 2 * n + 1))
        jac[:n, :n] = np.diag(-2.0 * (n_deg * emu + emu * (lap @ v)))
        jac[:n, n : 2 * n] = emu[:, None] * lap + np.diag(phih)
        jac[n : 2 * n, :n] = (
            np.diag(-2.0 * s_field)
            + 2.0 * emu[:, None] * lap
            - 2.0 * alpha * np.diag(emu * (lap @ phih))
        )
        jac[n : 2 * n, n : 2 * n] = alpha * (
            (emu[:, None] * lap) @ np.diag(2.0 * phih) + tau * np.diag(2.0 * phih)
        )
        jac[n : 2 * n, 2 * n] = -1.0
        jac[2 * n, :n] = 2.0 * np.pi * w * np.exp(2.0 * u)

        jr = np.zeros((2 * dim + 1, 2 * dim + 1))
        jr[:dim, :dim] = re @ jac[:n, :n] @ em
        jr[:dim, dim : 2 * dim] = re @ jac[:n, n : 2 * n] @ em
        jr[dim : 2 * dim, :dim] = re @ jac[n : 2 * n, :n] @ em
        jr[dim : 2 * dim, dim : 2 * dim] = re @ jac[n : 2 * n, n : 2 * n] @ em
        jr[dim : 2 * dim, 2 * dim] = -1.0
        jr[2 * dim, :dim] = jac[2 * n, :n] @ em
        rhs = -np.concatenate([re @ r1, re @ r2, [r3]])
        step = _gauge_aware_step(jr, rhs)

        current = history[-1]
        lam, improved = 1.0, False
        for _ in range(opts.max_halvings):
            trial = x + lam * step
            trial_sup = sup_norm(trial)
            if trial_sup < current:
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
        x = trial
        iterations += 1
        history.append(trial_sup)
        converged = trial_sup < opts.tolerance

    u, v, c = unpack(x)
    return u, v, float(c), history, converged, iterations


def solve_gravitating(
    config: HiggsConfig,
    schedule: ContinuationSchedule,
    grid: AxisymGrid,
    override_obstruction: bool = False,
    initial: GravitatingState | None = None,
) -> tuple[GravitatingState, ContinuationReport]:
    """Natural continuation in the coupling, seeding each step with the last.

    Refuses single-zero configurations (non-reductive automorphism group)
    unless explicitly overridden; the override exists because numerical
    divergence is not a theorem and must not be asserted as one.  Failure
    at any alpha returns the last converged state with converged=False.
    """
    config.require_abelian("solve_gravitating")
    check_vortex_window(config)
    reason = single_zero_reason(config)
    if reason is not None and not override_obstruction:
        raise ObstructionError(
            "refusing to run the coupled solver: " + reason, reasons=[reason]
        )
    symmetric = _is_symmetric(config)
    if initial is not None:
        u = initial.metric.u.copy()
        v = initial.bundle.v.copy()
        c = initial.c_value
    else:
        u, v, c = np.zeros(grid.n), np.zeros(grid.n), CONVENTION_C_COEFF

    steps: list[ContinuationStep] = []
    best = (u.copy(), v.copy(), c, 0.0)
    all_converged = True
    for alpha in schedule.alphas:
        u_new, v_new, c_new, history, ok, iters = _coupled_newton(
            grid, config, alpha, u, v, c, schedule.newton, symmetric
        )
        steps.append(
            ContinuationStep(
                alpha=alpha,
                converged=ok,
                iterations=iters,
                residual_sup=history[-1],
                c_est=c_new,
                u=u_new.copy() if ok else None,
                v=v_new.copy() if ok else None,
            )
        )
        if not ok:
            all_converged = False
            break
        u, v, c = u_new, v_new, c_new
        best = (u.copy(), v.copy(), c, alpha)

    u_fin, v_fin, c_fin, alpha_fin = best
    state = GravitatingState(
        metric=ConformalMetric(u=u_fin),
        bundle=BundleMetricPotential(v=v_fin),
        c_value=c_fin,
        alpha=alpha_fin,
    )
    report = ContinuationReport(
        converged=all_converged, steps=steps, resolution=grid.n
    )
    return state, report


def _schedule_to(alpha_target: float, step_cap: float = 0.05) -> tuple[float, ...]:
    if alpha_target <= 0.0:
        return (0.0,)
    k = max(1, math.ceil(alpha_target / step_cap))
    return tuple(alpha_target * i / k for i in range(k + 1))


@dataclass
class EinsteinBogomolnyiResult:
    state: GravitatingState
    alpha_star: float
    c_value: float
    alpha_tau_N: float
    predictions: dict
    converged: bool
    secant_history: list[tuple[float, float]]
    endpoint_c_values: tuple[float, float] | None = None

    def to_json_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "c_value": self.c_value,
            "alpha_tau_N": self.alpha_tau_N,
            "predictions": dict(self.predictions),
            "converged": self.converged,
            "secant_history": [list(p) for p in self.secant_history],
            "endpoint_c_values": (
                list(self.endpoint_c_values) if self.endpoint_c_values else None
            ),
        }


def einstein_bogomolnyi_solve(
    config: HiggsConfig,
    grid: AxisymGrid,
    newton: NewtonOptions | None = None,
    c_tolerance: float = 1e-8,
    max_secant_iter: int = 12,
    alpha_first_guess: float | None = None,
    override_obstruction: bool = False,
) -> EinsteinBogomolnyiResult:
    """Secant iteration on alpha for a zero topological constant.

    The map alpha -> c_est at the continued solution is affine to quadrature
    accuracy (c is topological), so the secant converges immediately.  The
    report carries alpha* tau N next to the quoted prediction 1 and the
    conventions-derived prediction 2; the discrepancy is documented, not
    asserted away.  Bracket/convergence failure returns converged=False with
    the endpoint c values.
    """
    config.require_abelian("einstein_bogomolnyi_solve")
    check_vortex_window(config)
    opts = newton or NewtonOptions(tolerance=1e-10)
    tau_n = float(config.tau) * sum(config.degrees)

    cache: dict[float, tuple[GravitatingState, float, bool]] = {}

    def c_at(alpha: float) -> tuple[GravitatingState, float, bool]:
        alpha = float(alpha)
        if alpha in cache:
            return cache[alpha]
        cfg = HiggsConfig(
            degrees=config.degrees,
            exponents=config.exponents,
            tau=config.tau,
            alpha=alpha,
        )
        schedule = ContinuationSchedule(alphas=_schedule_to(alpha), newton=opts)
        state, report = solve_gravitating(
            cfg, schedule, grid, override_obstruction=override_obstruction
        )
        result = (state, state.c_value, report.converged)
        cache[alpha] = result
        return result

    a0 = 0.0
    state0, c0, ok0 = c_at(a0)
    a1 = alpha_first_guess if alpha_first_guess is not None else min(0.1, 1.0 / tau_n)
    state1, c1, ok1 = c_at(a1)
    history = [(a0, c0), (a1, c1)]
    if not (ok0 and ok1):
        return EinsteinBogomolnyiResult(
            state=state1 if ok1 else state0,
            alpha_star=a1,
            c_value=c1,
            alpha_tau_N=a1 * tau_n,
            predictions=c_predictions(config, a1),
            converged=False,
            secant_history=history,
            endpoint_c_values=(c0, c1),
        )
    best_state, best_alpha, best_c = state1, a1, c1
    for _ in range(max_secant_iter):
        if abs(best_c) <= c_tolerance:
            break
        if c1 == c0:
            return EinsteinBogomolnyiResult(
                state=best_state,
                alpha_star=best_alpha,
                c_value=best_c,
                alpha_tau_N=best_alpha * tau_n,
                predictions=c_predictions(config, best_alpha),
                converged=False,
                secant_history=history,
                endpoint_c_values=(c0, c1),
            )
        a2 = a1 - c1 * (a1 - a0) / (c1 - c0)
        if a2 <= 0.0:
            a2 = 0.5 * a1
        state2, c2, ok2 = c_at(a2)
        history.append((a2, c2))
        if not ok2:
            return EinsteinBogomolnyiResult(
                state=best_state,
                alpha_star=best_alpha,
                c_value=best_c,
                alpha_tau_N=best_alpha * tau_n,
                predictions=c_predictions(config, best_alpha),
                converged=False,
                secant_history=history,
                endpoint_c_values=(c1, c2),
            )
        a0, c0, a1, c1 = a1, c1, a2, c2
        best_state, best_alpha, best_c = state2, a2, c2
    converged = abs(best_c) <= c_tolerance
    return EinsteinBogomolnyiResult(
        state=best_state,
        alpha_star=best_alpha,
        c_value=best_c,
        alpha_tau_N=best_alpha * tau_n,
        predictions=c_predictions(config, best_alpha),
        converged=converged,
        secant_history=history,
    )


def general_coupled_residual(
    grid: AxisymGrid, state: GravitatingState, config: HiggsConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals in the general coupled form, for cross-checking.

    The first equation is assembled through the circle-action moment map on
    the fiber, m = -(i/2)|phi|^2_H with central constant z = -i tau/2 after
    normalizing the couplings to be equal:

        R1' = i Lambda_omega F_H + (1/2)(|phi|^2_H - tau)  (= R1 exactly),
        R2' = S_omega + alpha Delta_omega |phi|^2_H
              - 2 alpha tau (i Lambda_omega F_H) - mean.

    Both are the same equations written two ways: algebraically
    R2'_full = R2_full - 2 alpha tau R1, so the forms agree pointwise at
    any vortex solution up to the documented constants.
    """
    config.require_abelian("general_coupled_residual")
    tau = float(config.tau)
    alpha = float(state.alpha)
    profile = higgs_profile(grid, config, 0)
    phi_sq = np.exp(2.0 * state.bundle.v) * profile
    moment_imag = -0.5 * phi_sq  # imaginary part of the fiberwise moment map
    curv = bundle_curvature(grid, state.metric, config.degrees[0], state.bundle.v)
    z_imag = -0.5 * tau
    r1p = curv - (moment_imag - z_imag)  # i(Lambda F + m - z) on u(1)
    s_field = scalar_curvature(grid, state.metric).s_field
    full = (
        s_field
        + alpha * laplacian(grid, state.metric, phi_sq)
        - 2.0 * alpha * tau * curv
    )
    mean = integrate(grid, state.metric, full) / volume(grid, state.metric)
    return r1p, full - mean
