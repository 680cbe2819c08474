import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predregret.errors import ConfigurationError, DomainError, UnsupportedDimensionError
from predregret.models import (
    MODEL_NAMES,
    ReparamMap,
    alpha_tensors,
    arcsine_map,
    fisher_info,
    get_model,
    identity_map,
    log_density,
    log_scale_map,
    read_design_csv,
    reparameterize,
)
from predregret.numerics import adaptive_integrate

from oracles import bernoulli_alpha, plain_diff, plain_second_diff


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestLogDensity:
    def test_fair_coin(self):
        assert log_density(get_model("bernoulli"), 1, [0.5]) == pytest.approx(math.log(0.5))

    def test_normal_mode(self):
        assert log_density(get_model("normal-mean"), 0.7, [0.7]) == pytest.approx(-0.5 * math.log(2 * math.pi))

    def test_bernoulli_mass(self):
        assert log_density(get_model("bernoulli"), 1, [0.3]) == pytest.approx(math.log(0.3))

    def test_out_of_support(self):
        with pytest.raises(DomainError):
            log_density(get_model("bernoulli"), 2, [0.3])

    @pytest.mark.parametrize("theta", [[0.0], [1.0], [1 - 1e-13]])
    def test_boundary_rejected(self, theta):
        with pytest.raises(DomainError):
            log_density(get_model("bernoulli"), 1, theta)

    def test_scale_boundary_rejected(self):
        with pytest.raises(DomainError):
            log_density(get_model("normal-ms"), 0.0, [0.0, 0.0])


class TestNormalization:
    def test_bernoulli_sums_to_one(self):
        m = get_model("bernoulli")
        for th in (0.1, 0.5, 0.93):
            total = sum(math.exp(log_density(m, x, [th])) for x in (0, 1))
            assert abs(total - 1.0) < 1e-12

    @pytest.mark.parametrize("name", ["normal-mean", "normal-ms", "normal-ls"])
    def test_real_line_models(self, name):
        m = get_model(name)
        for th in m.default_grid[:4]:
            centre = th[0]
            spread = th[1] if name == "normal-ms" else (math.exp(th[1]) if name == "normal-ls" else 1.0)
            lo, hi = centre - 14 * spread, centre + 14 * spread
            val = adaptive_integrate(lambda x: np.exp(m.log_f(x, th)), (lo, hi), rel_tol=1e-12)
            assert abs(val - 1.0) < 1e-8

    def test_linreg(self):
        m = get_model("linreg")
        th = m.default_grid[0]
        z = m.design
        total = 0.0
        for r in range(len(z)):
            mu = float(z[r] @ th[:2])
            sd = math.exp(th[2])

            def f(y, r=r):
                return np.exp(m.log_f(np.column_stack([np.full_like(y, r), y]), th))

            total += adaptive_integrate(f, (mu - 14 * sd, mu + 14 * sd), rel_tol=1e-12)
        assert abs(total - 1.0) < 1e-8

    def test_mvn2(self):
        m = get_model("mvn2")
        th = m.default_grid[1]
        cov = np.linalg.inv(np.array([[th[0], 0], [th[1] * th[2], th[1]]]).T
                            @ np.array([[th[0], 0], [th[1] * th[2], th[1]]]))
        s = np.sqrt(np.diag(cov))
        box = [(th[3] - 12 * s[0], th[3] + 12 * s[0]), (th[4] - 12 * s[1], th[4] + 12 * s[1])]
        val = adaptive_integrate(lambda x: np.exp(m.log_f(x, th)), box, rel_tol=1e-10, max_nodes=2**16)
        assert abs(val - 1.0) < 1e-8


class TestFisher:
    def test_normal_mean_unit(self):
        assert fisher_info(get_model("normal-mean"), [1.7])[0, 0] == 1.0

    def test_location_logscale(self):
        lam = 0.4
        np.testing.assert_allclose(fisher_info(get_model("normal-ls"), [0.3, lam]),
                                   np.diag([math.exp(-2 * lam), 2.0]))

    def test_bernoulli_half(self):
        m = get_model("bernoulli")
        assert fisher_info(m, [0.5])[0, 0] == pytest.approx(4.0)
        # oracle: finite difference of the expected log-likelihood, measure frozen at 0.5
        ell = lambda t: 0.5 * math.log(t) + 0.5 * math.log(1 - t)  # noqa: E731
        assert -plain_second_diff(ell, 0.5) == pytest.approx(4.0, rel=1e-6)

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_numeric_fallback_agrees(self, name):
        m = get_model(name)
        for th in m.default_grid:
            closed = fisher_info(m, th, method="closed")
            numeric = fisher_info(m, th, method="numeric")
            assert _rel(numeric, closed) < 1e-6

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_symmetric_positive_definite(self, name):
        m = get_model(name)
        for th in m.default_grid:
            i = fisher_info(m, th)
            assert np.max(np.abs(i - i.T)) == 0.0
            assert np.all(np.linalg.eigvalsh(i) > 0)

    def test_batched_closed_form(self):
        m = get_model("normal-ms")
        batch = fisher_info(m, m.default_grid)
        for th, mat in zip(m.default_grid, batch):
            np.testing.assert_array_equal(mat, fisher_info(m, th))


class TestAlphaTensors:
    def test_normal_mean(self):
        al = alpha_tensors(get_model("normal-mean"), [0.4])
        assert al.alpha111 == pytest.approx(0.0, abs=1e-12)
        assert al.curvature == pytest.approx(0.0, abs=1e-10)

    def test_bernoulli_symmetric_point(self):
        assert alpha_tensors(get_model("bernoulli"), [0.5]).alpha111 == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("theta", [0.3, 0.7, 0.05])
    def test_bernoulli_oracle(self, theta):
        al = alpha_tensors(get_model("bernoulli"), [theta])
        ref = bernoulli_alpha(theta)
        assert (al.alpha111, al.alpha12, al.alpha22) == pytest.approx(ref, rel=1e-12)

    def test_curvature_nonnegative(self):
        for name in ("bernoulli", "normal-mean"):
            m = get_model(name)
            for th in m.default_grid:
                assert alpha_tensors(m, th).curvature >= -1e-10

    def test_multiparameter_rejected(self):
        with pytest.raises(UnsupportedDimensionError):
            alpha_tensors(get_model("normal-ms"), [0.0, 1.0])


class TestReparameterize:
    def test_log_scale(self):
        m = reparameterize(get_model("normal-ms"), log_scale_map())
        lam = -0.3
        np.testing.assert_allclose(fisher_info(m, [1.0, lam]), np.diag([math.exp(-2 * lam), 2.0]), rtol=1e-14)

    def test_identity(self):
        base = get_model("mvn2")
        m = reparameterize(base, identity_map(base))
        for th in base.default_grid:
            np.testing.assert_array_equal(fisher_info(m, th), fisher_info(base, th))

    def test_arcsine_constant_four(self):
        m = reparameterize(get_model("bernoulli"), arcsine_map())
        for eta in np.linspace(0.1, 1.4, 9):
            # chain-rule oracle: i(theta) (dtheta/deta)^2
            th = math.sin(eta) ** 2
            dth = plain_diff(lambda e: math.sin(e) ** 2, eta)
            assert fisher_info(m, [eta])[0, 0] == pytest.approx(dth**2 / (th * (1 - th)), rel=1e-6)
            assert fisher_info(m, [eta])[0, 0] == pytest.approx(4.0, rel=1e-12)

    @given(st.floats(-2, 2), st.floats(-1.5, 1.5))
    @settings(max_examples=30, deadline=None)
    def test_sandwich_property(self, beta, lam):
        base = get_model("normal-ms")
        m = reparameterize(base, log_scale_map())
        jac = np.diag([1.0, math.exp(lam)])
        expected = jac.T @ fisher_info(base, [beta, math.exp(lam)]) @ jac
        assert _rel(fisher_info(m, [beta, lam]), expected) < 1e-6

    def test_reparameterized_numeric_fallback(self):
        m = reparameterize(get_model("normal-ms"), log_scale_map())
        th = [0.5, 0.2]
        assert _rel(fisher_info(m, th, method="numeric"), fisher_info(m, th)) < 1e-6

    def test_singular_jacobian(self):
        base = get_model("normal-mean")
        flat_map = ReparamMap("cube", lambda e: np.asarray(e) ** 3, np.cbrt,
                              lambda e: 3 * np.asarray(e)[..., None] ** 2, ((-np.inf, np.inf),), ("eta",))
        m = reparameterize(base, flat_map)
        with pytest.raises(DomainError):
            fisher_info(m, [0.0])


class TestRegistry:
    def test_unknown_model(self):
        with pytest.raises(ConfigurationError):
            get_model("poisson")

    def test_design_only_for_linreg(self):
        with pytest.raises(ConfigurationError):
            get_model("bernoulli", design=np.eye(2))

    def test_rank_deficient_design(self):
        with pytest.raises(ConfigurationError):
            get_model("linreg", design=np.ones((5, 2)))

    def test_design_csv(self, tmp_path):
        path = tmp_path / "design.csv"
        path.write_text("intercept,z\n1,-1\n1,0\n1,1\n")
        z = read_design_csv(path)
        assert z.shape == (3, 2)
        m = get_model("linreg", design=z)
        np.testing.assert_allclose(m.meta["V"], np.diag([1.0, 2.0 / 3.0]))

    def test_sampler_deterministic(self):
        m = get_model("normal-ms")
        a = m.sample([0.0, 2.0], 5, seed=3)
        b = m.sample([0.0, 2.0], 5, seed=3)
        np.testing.assert_array_equal(a, b)
