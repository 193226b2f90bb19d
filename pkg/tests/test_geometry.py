"""Grid construction, quadrature, Laplacian, and curvature invariants."""

import math

import numpy as np
import pytest

from gravortex import (
    ConfigurationError,
    NumericInputError,
    build_grid,
    integrate,
    laplacian,
    normalize_volume,
    round_metric,
    scalar_curvature,
    volume,
)
from gravortex.geometry import (
    GAUSS_BONNET_TOTAL,
    cumulative_antiderivative,
    hamiltonian_potential,
    write_profile_csv,
)

TWO_PI = 2.0 * math.pi


def random_bump(rng, s):
    a = rng.uniform(-0.4, 0.4)
    b = rng.uniform(1.0, 6.0)
    s0 = rng.uniform(-0.7, 0.7)
    return a * np.exp(-b * (s - s0) ** 2)


@pytest.fixture(scope="module")
def grid129():
    return build_grid(129)


class TestBuildGrid:
    def test_weights_sum_to_two(self):
        grid = build_grid(33)
        assert abs(math.fsum(grid.weights.tolist()) - 2.0) <= 1e-12

    def test_derivative_of_constant_vanishes(self):
        for n in (33, 129):
            grid = build_grid(n)
            assert np.max(np.abs(grid.d1 @ np.ones(grid.n))) <= 1e-12

    def test_quadrature_exact_for_s_squared(self):
        grid = build_grid(65)
        value = math.fsum((grid.weights * grid.nodes**2).tolist())
        assert abs(value - 2.0 / 3.0) <= 1e-12

    def test_quadrature_exact_to_induced_degree(self):
        # n-point weights integrate polynomials up to degree n-1 exactly
        grid = build_grid(33)
        for power in (30, 32):
            value = math.fsum((grid.weights * grid.nodes**power).tolist())
            assert abs(value - 2.0 / (power + 1)) <= 1e-12
        value = math.fsum((grid.weights * grid.nodes**31).tolist())
        assert abs(value) <= 1e-12

    def test_d2_is_d1_composed(self):
        grid = build_grid(33)
        s = grid.nodes
        poly = s ** (grid.n - 2)
        assert np.max(np.abs(grid.d2 @ poly - grid.d1 @ (grid.d1 @ poly))) <= 1e-10
        poly2 = s**10 - 3.0 * s**7 + 0.5 * s**2
        second = 90.0 * s**8 - 126.0 * s**5 + 1.0
        assert np.max(np.abs(grid.d2 @ poly2 - second)) <= 1e-9

    def test_nodes_symmetric_and_contain_zero(self, grid129):
        s = grid129.nodes
        assert np.all(s == -s[::-1])
        assert s[grid129.n // 2] == 0.0

    @pytest.mark.parametrize("bad", [34, 31, 4099, 128])
    def test_invalid_node_counts_rejected(self, bad):
        with pytest.raises(ConfigurationError):
            build_grid(bad)

    def test_deterministic(self):
        a, b = build_grid(65), build_grid(65)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.d1, b.d1)


class TestIntegrate:
    def test_round_volume(self, grid129):
        assert abs(integrate(grid129, None, np.ones(129)) - TWO_PI) <= 1e-12

    def test_zero_integrand(self, grid129):
        assert integrate(grid129, None, np.zeros(129)) == 0.0

    def test_odd_function_vanishes(self, grid129):
        assert abs(integrate(grid129, None, grid129.nodes)) <= 1e-12

    def test_linearity(self, grid129):
        s = grid129.nodes
        f, g = np.exp(s), np.cos(2 * s)
        lhs = integrate(grid129, None, 2.5 * f - 1.25 * g)
        rhs = 2.5 * integrate(grid129, None, f) - 1.25 * integrate(grid129, None, g)
        assert abs(lhs - rhs) <= 1e-12

    def test_rejects_non_finite(self, grid129):
        bad = np.ones(129)
        bad[3] = np.inf
        with pytest.raises(NumericInputError):
            integrate(grid129, None, bad)


class TestNormalizeVolume:
    def test_round_already_normalized(self, grid129):
        metric = normalize_volume(grid129, np.zeros(129))
        assert np.max(np.abs(metric.u)) <= 1e-14

    def test_constant_shifts_out(self, grid129):
        metric = normalize_volume(grid129, 3.0 * np.ones(129))
        assert np.max(np.abs(metric.u)) <= 1e-12

    def test_idempotent_on_bump(self, grid129):
        rng = np.random.default_rng(7)
        metric = normalize_volume(grid129, random_bump(rng, grid129.nodes))
        assert abs(volume(grid129, metric) - TWO_PI) <= 1e-12 * TWO_PI
        again = normalize_volume(grid129, metric.u)
        assert np.max(np.abs(again.u - metric.u)) <= 1e-14


class TestLaplacian:
    def test_kernel_contains_constants(self, grid129):
        # dense-operator round-off floor; spectrally this is exact
        out = laplacian(grid129, None, np.ones(129))
        assert np.max(np.abs(out)) <= 1e-10

    def test_divergence_theorem_any_metric(self, grid129):
        rng = np.random.default_rng(11)
        metric = normalize_volume(grid129, random_bump(rng, grid129.nodes))
        out = laplacian(grid129, metric, grid129.nodes)
        assert abs(integrate(grid129, metric, out)) <= 1e-10

    def test_round_eigenfunction_degree_one(self):
        # positive convention: Delta_FS s = 4 s; checked at two resolutions
        for n in (65, 129):
            grid = build_grid(n)
            out = laplacian(grid, None, grid.nodes)
            assert np.max(np.abs(out - 4.0 * grid.nodes)) <= 1e-10

    def test_conformal_covariance(self, grid129):
        rng = np.random.default_rng(3)
        metric = normalize_volume(grid129, random_bump(rng, grid129.nodes))
        f = np.sin(2.0 * grid129.nodes)
        lhs = laplacian(grid129, metric, f)
        rhs = np.exp(-2.0 * metric.u) * laplacian(grid129, None, f)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_self_adjointness(self, grid129):
        rng = np.random.default_rng(5)
        metric = normalize_volume(grid129, random_bump(rng, grid129.nodes))
        for _ in range(5):
            f = random_bump(rng, grid129.nodes) + 0.2 * np.cos(3 * grid129.nodes)
            g = random_bump(rng, grid129.nodes) + 0.1 * grid129.nodes**2
            lhs = integrate(grid129, metric, f * laplacian(grid129, metric, g))
            rhs = integrate(grid129, metric, g * laplacian(grid129, metric, f))
            scale = integrate(grid129, metric, np.abs(f * laplacian(grid129, metric, g)))
            assert abs(lhs - rhs) / max(scale, 1e-30) <= 1e-9

    def test_spectral_convergence(self):
        # analytic function with a pole just outside [-1, 1]: the error decays
        # geometrically, so each doubling of n beats any fixed power of 1/n
        errors = []
        for n in (33, 65, 129):
            grid = build_grid(n)
            s = grid.nodes
            f = 1.0 / (1.02 - s)
            fp = 1.0 / (1.02 - s) ** 2
            fpp = 2.0 / (1.02 - s) ** 3
            exact = -2.0 * ((1 - s**2) * fpp - 2 * s * fp)
            errors.append(np.max(np.abs(laplacian(grid, None, f) - exact)))
            scale = np.max(np.abs(exact))
        assert errors[1] <= errors[0] * 1e-2
        assert errors[2] <= errors[1] * 1e-2
        # the decay rate itself accelerates: no fixed power matches it
        assert errors[2] / errors[1] <= errors[1] / errors[0]
        assert errors[2] <= 1e-9 * scale


class TestScalarCurvature:
    def test_round_is_constant_four(self, grid129):
        report = scalar_curvature(grid129, round_metric(grid129))
        assert np.max(np.abs(report.s_field - 4.0)) <= 1e-12
        assert abs(report.total - GAUSS_BONNET_TOTAL) <= 1e-10
        assert abs(report.mean - 4.0) <= 1e-10

    def test_gauss_bonnet_random_conformal(self, grid129):
        rng = np.random.default_rng(42)
        for _ in range(20):
            metric = normalize_volume(grid129, random_bump(rng, grid129.nodes))
            report = scalar_curvature(grid129, metric)
            assert abs(report.total - GAUSS_BONNET_TOTAL) <= 1e-8 * GAUSS_BONNET_TOTAL

    def test_round_field_resolution_independent(self):
        a = scalar_curvature(build_grid(65), round_metric(build_grid(65)))
        b = scalar_curvature(build_grid(129), round_metric(build_grid(129)))
        assert np.max(np.abs(a.s_field - 4.0)) <= 1e-12
        assert np.max(np.abs(b.s_field - 4.0)) <= 1e-12


class TestHamiltonianPotential:
    def test_round_metric_gives_half_s(self, grid129):
        ham = hamiltonian_potential(grid129, None)
        assert np.max(np.abs(ham - grid129.nodes / 2.0)) <= 1e-12

    def test_mean_normalized_any_metric(self, grid129):
        rng = np.random.default_rng(9)
        metric = normalize_volume(grid129, random_bump(rng, grid129.nodes))
        ham = hamiltonian_potential(grid129, metric)
        assert abs(integrate(grid129, metric, ham)) <= 1e-10

    def test_antiderivative_exact_on_polynomials(self, grid129):
        s = grid129.nodes
        out = cumulative_antiderivative(grid129, 3.0 * s**2)
        assert np.max(np.abs(out - (s**3 + 1.0))) <= 1e-10


class TestCsvExport:
    def test_profile_roundtrip_17_digits(self, grid129, tmp_path):
        path = tmp_path / "field.csv"
        values = np.exp(grid129.nodes) / 3.0
        write_profile_csv(path, grid129.nodes, values)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "s,value"
        parsed = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
        assert np.array_equal(parsed[:, 0], grid129.nodes)
        assert np.array_equal(parsed[:, 1], values)
