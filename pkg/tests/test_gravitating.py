"""Coupled solver, continuation, EB secant, and the general-form cross-check."""

import math

import numpy as np
import pytest

from gravortex import (
    BundleMetricPotential,
    ConformalMetric,
    ContinuationSchedule,
    GravitatingState,
    HiggsConfig,
    InfeasibleError,
    NewtonOptions,
    ObstructionError,
    build_grid,
    einstein_bogomolnyi_solve,
    gravitating_residual,
    integrate,
    general_coupled_residual,
    normalize_volume,
    solve_gravitating,
    solve_vortex,
    volume,
)
from gravortex.gravitating import c_from_integral_identity, c_predictions

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def grid():
    return build_grid(129)


@pytest.fixture(scope="module")
def symmetric_config():
    return HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0)


@pytest.fixture(scope="module")
def solved(grid, symmetric_config):
    schedule = ContinuationSchedule(alphas=(0.0, 0.02, 0.05, 0.1))
    return solve_gravitating(symmetric_config, schedule, grid)


class TestGravitatingResidual:
    def test_alpha_zero_round_plus_vortex(self, grid):
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0, alpha=0.0)
        pot, rep = solve_vortex(grid, None, cfg)
        assert rep.converged
        state = GravitatingState(
            metric=ConformalMetric(u=np.zeros(grid.n)),
            bundle=pot,
            c_value=4.0,
            alpha=0.0,
        )
        r1, r2, c_est = gravitating_residual(grid, state, cfg)
        assert np.max(np.abs(r1)) <= 1e-10
        assert np.max(np.abs(r2)) <= 1e-10
        assert c_est == pytest.approx(4.0, abs=1e-10)

    def test_r2_mean_zero_by_construction(self, grid):
        rng = np.random.default_rng(3)
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0, alpha=0.3)
        metric = normalize_volume(grid, 0.2 * np.exp(-2 * (grid.nodes + 0.1) ** 2))
        state = GravitatingState(
            metric=metric,
            bundle=BundleMetricPotential(0.1 * np.cos(grid.nodes)),
            c_value=0.0,
            alpha=0.3,
        )
        _, r2, _ = gravitating_residual(grid, state, cfg)
        assert abs(integrate(grid, metric, r2)) <= 1e-10

    def test_c_est_matches_integral_identity_at_solution(self, grid, solved):
        state, _ = solved
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0)
        _, _, c_est = gravitating_residual(grid, state, cfg)
        assert abs(c_est - c_from_integral_identity(grid, state, cfg)) <= 1e-8


class TestSolveGravitating:
    def test_continuation_converges_every_step(self, solved):
        state, report = solved
        assert report.converged
        assert all(step.converged for step in report.steps)
        assert all(step.residual_sup <= 1e-9 for step in report.steps)

    def test_solution_even(self, solved):
        state, _ = solved
        assert np.max(np.abs(state.metric.u - state.metric.u[::-1])) <= 1e-11
        assert np.max(np.abs(state.bundle.v - state.bundle.v[::-1])) <= 1e-11

    def test_c_tracks_topological_value(self, solved, symmetric_config):
        _, report = solved
        for step in report.steps:
            expected = 4.0 - 2.0 * step.alpha * 5.0 * 2.0
            assert step.c_est == pytest.approx(expected, abs=1e-9)

    def test_volume_stays_normalized(self, grid, solved):
        state, _ = solved
        assert abs(volume(grid, state.metric) - TWO_PI) <= 1e-10

    def test_alpha_zero_schedule_returns_round_metric(self, grid):
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0)
        state, report = solve_gravitating(
            cfg, ContinuationSchedule(alphas=(0.0,)), grid
        )
        assert report.converged
        assert np.max(np.abs(state.metric.u)) <= 1e-11
        assert state.c_value == pytest.approx(4.0, abs=1e-10)

    def test_single_zero_refused_without_override(self, grid):
        cfg = HiggsConfig(degrees=(1,), exponents=(0,), tau=3.0)
        with pytest.raises(ObstructionError) as err:
            solve_gravitating(cfg, ContinuationSchedule(alphas=(0.0,)), grid)
        assert "only one zero" in str(err.value)

    def test_single_zero_override_runs_and_reports(self, grid):
        cfg = HiggsConfig(degrees=(1,), exponents=(0,), tau=3.0)
        state, report = solve_gravitating(
            cfg,
            ContinuationSchedule(alphas=(0.0,)),
            grid,
            override_obstruction=True,
        )
        # alpha = 0 decouples, so the run itself succeeds; no divergence asserted
        assert report.steps[0].converged

    def test_infeasible_window_raises(self, grid):
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=4.0)
        with pytest.raises(InfeasibleError):
            solve_gravitating(cfg, ContinuationSchedule(alphas=(0.0,)), grid)

    def test_determinism_bit_identical(self, grid, symmetric_config):
        schedule = ContinuationSchedule(alphas=(0.0, 0.05))
        s1, r1 = solve_gravitating(symmetric_config, schedule, grid)
        s2, r2 = solve_gravitating(symmetric_config, schedule, grid)
        assert np.array_equal(s1.metric.u, s2.metric.u)
        assert np.array_equal(s1.bundle.v, s2.bundle.v)
        assert s1.c_value == s2.c_value
        assert [st.residual_sup for st in r1.steps] == [
            st.residual_sup for st in r2.steps
        ]

    def test_continuation_continuity_under_step_halving(self, grid, symmetric_config):
        coarse = ContinuationSchedule(alphas=(0.0, 0.1))
        fine = ContinuationSchedule(alphas=(0.0, 0.05, 0.1))
        s_coarse, r_coarse = solve_gravitating(symmetric_config, coarse, grid)
        s_fine, r_fine = solve_gravitating(symmetric_config, fine, grid)
        # same end point regardless of path (uniqueness of the even solution)
        assert np.max(np.abs(s_coarse.metric.u - s_fine.metric.u)) <= 1e-9

        def max_step_jump(report):
            jumps = []
            for prev, nxt in zip(report.steps, report.steps[1:]):
                jumps.append(np.max(np.abs(nxt.u - prev.u)))
            return max(jumps)

        # halving the coupling step shrinks the per-step solution increments
        assert max_step_jump(r_fine) < max_step_jump(r_coarse)

    def test_two_resolution_agreement(self, symmetric_config):
        schedule = ContinuationSchedule(alphas=(0.0, 0.05, 0.1))
        coarse, fine = build_grid(129), build_grid(257)
        s_c, r_c = solve_gravitating(symmetric_config, schedule, coarse)
        s_f, r_f = solve_gravitating(
            symmetric_config,
            ContinuationSchedule(alphas=(0.0, 0.05, 0.1), newton=NewtonOptions(tolerance=1e-9)),
            fine,
        )
        assert r_c.converged and r_f.converged
        interp_u = coarse.interpolate(s_c.metric.u, fine.nodes)
        assert np.max(np.abs(interp_u - s_f.metric.u)) <= 1e-7


class TestEinsteinBogomolnyi:
    def test_finds_zero_constant_coupling(self, grid, symmetric_config):
        result = einstein_bogomolnyi_solve(symmetric_config, grid)
        assert result.converged
        assert abs(result.c_value) <= 1e-8
        # conventions-derived prediction alpha tau N = 2; quoted alternative is 1
        assert result.alpha_tau_N == pytest.approx(2.0, abs=1e-6)
        assert result.predictions["alpha_tau_N"] == result.alpha_tau_N
        assert "quoted" in result.predictions and "conventions" in result.predictions

    def test_c_affine_in_alpha_at_fixed_state(self, grid, solved):
        state, _ = solved
        cfg0 = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0)
        values = []
        for alpha in (0.0, 0.1, 0.2):
            probe = GravitatingState(
                metric=state.metric, bundle=state.bundle, c_value=0.0, alpha=alpha
            )
            _, _, c_est = gravitating_residual(grid, probe, cfg0)
            values.append(c_est)
        assert values[2] - values[1] == pytest.approx(values[1] - values[0], abs=1e-9)

    def test_predictions_dictionary(self, symmetric_config):
        preds = c_predictions(symmetric_config, alpha=0.2)
        assert preds["alpha_tau_N"] == pytest.approx(2.0)
        assert preds["conventions"] == pytest.approx(0.0)
        assert preds["quoted"] == pytest.approx(-2.0)


class TestGeneralFormCrossCheck:
    def test_first_equation_identical(self, grid, solved):
        state, _ = solved
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0)
        r1, _, _ = gravitating_residual(grid, state, cfg)
        r1p, _ = general_coupled_residual(grid, state, cfg)
        dev = r1p - r1
        assert np.max(np.abs(dev - dev.mean())) <= 1e-12

    def test_second_equation_differs_by_first_residual(self, grid):
        # R2'_full = R2_full - 2 alpha tau R1 exactly, at any state
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0, alpha=0.3)
        rng = np.random.default_rng(17)
        metric = normalize_volume(grid, 0.2 * np.sin(grid.nodes))
        state = GravitatingState(
            metric=metric,
            bundle=BundleMetricPotential(0.15 * np.cos(2 * grid.nodes)),
            c_value=0.0,
            alpha=0.3,
        )
        r1, r2, _ = gravitating_residual(grid, state, cfg)
        _, r2p = general_coupled_residual(grid, state, cfg)
        correction = -2.0 * 0.3 * 5.0 * r1
        correction -= integrate(grid, metric, correction) / volume(grid, metric)
        assert np.max(np.abs(r2p - (r2 + correction))) <= 1e-12

    def test_alpha_zero_reduces_to_curvature_deviation(self, grid):
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0, alpha=0.0)
        metric = normalize_volume(grid, 0.1 * np.cos(grid.nodes))
        state = GravitatingState(
            metric=metric,
            bundle=BundleMetricPotential(np.zeros(grid.n)),
            c_value=0.0,
            alpha=0.0,
        )
        from gravortex import scalar_curvature

        _, r2p = general_coupled_residual(grid, state, cfg)
        s_field = scalar_curvature(grid, metric).s_field
        expected = s_field - integrate(grid, metric, s_field) / volume(grid, metric)
        assert np.max(np.abs(r2p - expected)) <= 1e-12

    def test_scaling_linear_in_alpha(self, grid):
        cfg = HiggsConfig(degrees=(2,), exponents=(1,), tau=5.0)
        metric = normalize_volume(grid, 0.1 * np.cos(grid.nodes))
        bundle = BundleMetricPotential(0.05 * grid.nodes**2)

        def coupling_part(alpha):
            state = GravitatingState(
                metric=metric, bundle=bundle, c_value=0.0, alpha=alpha
            )
            _, r2p = general_coupled_residual(grid, state, cfg)
            base = GravitatingState(metric=metric, bundle=bundle, c_value=0.0, alpha=0.0)
            _, r2p0 = general_coupled_residual(grid, base, cfg)
            return r2p - r2p0

        once = coupling_part(0.2)
        twice = coupling_part(0.4)
        assert np.max(np.abs(twice - 2.0 * once)) <= 1e-12
