import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predregret.errors import DomainError, NonConvergenceError
from predregret.numerics import (
    SeededStream,
    adaptive_integrate,
    central_diff,
    expect_log_weighted,
    gauss_hermite,
    gauss_legendre,
    integrate,
    mc_mean,
    tensor_legendre,
)

from oracles import simpson


class TestCentralDiff:
    def test_quadratic_gradient_exact(self):
        assert central_diff(lambda x: x**2, 3.0) == pytest.approx(6.0, abs=1e-9)

    def test_exp_second_derivative(self):
        assert abs(central_diff(np.exp, 0.0, order=2) - 1.0) < 1e-8

    def test_constant_has_zero_derivatives(self):
        f = lambda z: np.full(np.shape(z)[:-1], 4.2)  # noqa: E731
        x = np.array([0.3, -1.0])
        assert np.all(central_diff(f, x) == 0.0)
        assert np.all(central_diff(f, x, order=2) == 0.0)

    @pytest.mark.parametrize("f, df, d2f, x", [
        (np.exp, np.exp, np.exp, 1.3),
        (np.log, lambda x: 1 / x, lambda x: -1 / x**2, 2.5),
        (lambda x: x**4 - 3 * x, lambda x: 4 * x**3 - 3, lambda x: 12 * x**2, -0.7),
    ])
    def test_known_functions(self, f, df, d2f, x):
        assert central_diff(f, x) == pytest.approx(df(x), rel=1e-8, abs=1e-8)
        assert central_diff(f, x, order=2) == pytest.approx(d2f(x), rel=1e-8, abs=1e-8)

    def test_hessian_is_symmetric(self):
        f = lambda z: np.sin(z[..., 0]) * np.exp(z[..., 1]) + z[..., 0] ** 2 * z[..., 1]  # noqa: E731
        H = central_diff(f, np.array([0.4, -0.2]), order=2)
        assert np.array_equal(H, H.T)
        x, y = 0.4, -0.2
        assert H[0, 1] == pytest.approx(math.cos(x) * math.exp(y) + 2 * x, abs=1e-7)

    def test_batched_points(self):
        f = lambda z: (z**2).sum(-1)  # noqa: E731
        pts = np.array([[1.0, 2.0], [-3.0, 0.5]])
        np.testing.assert_allclose(central_diff(f, pts), 2 * pts, atol=1e-9)

    def test_non_finite_stencil_raises(self):
        with pytest.raises(DomainError):
            central_diff(np.log, 0.0)

    @given(st.floats(-3, 3))
    @settings(max_examples=40, deadline=None)
    def test_sin_derivative_property(self, x):
        assert abs(central_diff(np.sin, x) - math.cos(x)) < 1e-9


class TestQuadrature:
    def test_unit_interval_length(self):
        assert integrate(gauss_legendre(4, 0.0, 1.0), np.ones_like) == pytest.approx(1.0, abs=1e-15)

    def test_hermite_variance(self):
        assert abs(integrate(gauss_hermite(64), lambda z: z**2) - 1.0) < 1e-10

    def test_hermite_recentred(self):
        rule = gauss_hermite(32, mean=2.0, sd=3.0)
        assert integrate(rule, lambda z: z) == pytest.approx(2.0, abs=1e-12)
        assert integrate(rule, lambda z: (z - 2.0) ** 2) == pytest.approx(9.0, abs=1e-10)

    @pytest.mark.parametrize("count", [1, 3, 8, 20])
    def test_legendre_polynomial_exactness(self, count):
        rule = gauss_legendre(count, -1.0, 2.0)
        deg = 2 * count - 1
        exact = (2.0 ** (deg + 1) - (-1.0) ** (deg + 1)) / (deg + 1)
        assert integrate(rule, lambda x: x**deg) == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_rule_invariants(self):
        rule = gauss_legendre(16)
        assert np.all(rule.weights > 0)
        assert np.all(np.abs(rule.nodes) < 1)
        assert np.all(gauss_hermite(64).weights > 0)

    def test_tensor_rule_product_integral(self):
        nodes, w = tensor_legendre([5, 7], [(0, 1), (0, 2)])
        val = w @ (nodes[:, 0] ** 2 * nodes[:, 1] ** 3)
        assert val == pytest.approx((1 / 3) * 4.0, rel=1e-13)

    def test_adaptive_matches_simpson(self):
        f = lambda x: np.exp(-x) * np.sin(3 * x) ** 2  # noqa: E731
        ours = adaptive_integrate(f, (0.0, 4.0), rel_tol=1e-12)
        ref = simpson(f, 0.0, 4.0, 200_000)
        assert ours == pytest.approx(ref, rel=1e-10)

    def test_adaptive_box(self):
        f = lambda z: np.exp(z[:, 0] + 2 * z[:, 1])  # noqa: E731
        val = adaptive_integrate(f, [(0, 1), (0, 1)], rel_tol=1e-12)
        assert val == pytest.approx((math.e - 1) * (math.e**2 - 1) / 2, rel=1e-11)

    def test_adaptive_cap_raises_with_estimates(self):
        with pytest.raises(NonConvergenceError) as err:
            adaptive_integrate(lambda x: np.sign(x - 0.1234567), (-1.0, 1.0), rel_tol=1e-14, max_nodes=256)
        assert err.value.previous is not None and err.value.current is not None


class TestMonteCarlo:
    def test_constant_statistic(self):
        mean, se = mc_mean(SeededStream(1), lambda rng: rng.random(), lambda _: 2.5, 10)
        assert (mean, se) == (2.5, 0.0)

    def test_reproducible(self):
        run = lambda: mc_mean(SeededStream(7, 3), lambda rng: rng.normal(), lambda v: v, 500)  # noqa: E731
        assert run() == run()

    def test_streams_differ(self):
        a = SeededStream(7, 0).generator().random(5)
        b = SeededStream(7, 1).generator().random(5)
        assert not np.array_equal(a, b)

    def test_bernoulli_indicator(self):
        mean, se = mc_mean(SeededStream(11), lambda rng: rng.random() < 0.3, float, 100_000)
        assert abs(mean - 0.3) < 3 * se

    def test_too_few_replicates(self):
        with pytest.raises(ValueError):
            mc_mean(SeededStream(1), lambda rng: 0.0, float, 1)


class TestLogDomain:
    def test_drops_impossible_cells(self):
        assert expect_log_weighted([0.0, -np.inf], [2.0, np.nan]) == 2.0

    def test_survives_tiny_weights(self):
        lw = np.array([-800.0, -801.0])
        val = expect_log_weighted(lw, [1.0, 1.0])
        assert val == pytest.approx(math.exp(-800) * (1 + math.exp(-1)), rel=1e-12)

    def test_all_impossible(self):
        assert expect_log_weighted([-np.inf], [1.0]) == 0.0
