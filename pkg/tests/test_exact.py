import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import betaln

from predregret.asymptotics import predictive_loss
from predregret.errors import DomainError, UnsupportedPairError
from predregret.exact import (
    DiscretePrior,
    c_n,
    clarke_barron_residual,
    convergence_table,
    identity_residuals,
    joint_regret,
    m_schedule,
    mc_regret,
    mixture_regret,
    posterior_predictive,
    posterior_predictive_regret,
    predictive_loss_finite,
    prior_predictive_regret,
    scoring_rule_check,
)
from predregret.models import get_model
from predregret.priors import PriorSpec, beta_prior, exp_tilt, flat, jeffreys, normal_prior, power_sigma

from oracles import brute_mixture_regret, brute_posterior_regret, brute_prior_regret

BERN = get_model("bernoulli")
NM = get_model("normal-mean")
MS = get_model("normal-ms")
LS = get_model("normal-ls")


def _beta_mix(components):
    """Equal-weight mixture of Beta densities, as an opaque normalised prior."""

    def log_pi(t):
        th = t[..., 0]
        parts = [(a - 1) * np.log(th) + (b - 1) * np.log1p(-th) - betaln(a, b) for a, b in components]
        return np.logaddexp.reduce(parts, axis=0) - math.log(len(components))

    return PriorSpec("beta-mix", 1, log_pi, bounds=((0.0, 1.0),), proper=True, normalizer=0.0)


def _brute_mix_post_regret(theta, components, n, m):
    def log_marg(seq):
        s, N = sum(seq), len(seq)
        return np.logaddexp.reduce([betaln(a + s, b + N - s) - betaln(a, b) for a, b in components]) \
            - math.log(len(components))

    total = 0.0
    for seq in itertools.product((0, 1), repeat=n + m):
        w = math.prod(theta if v else 1 - theta for v in seq)
        truth = sum(math.log(theta if v else 1 - theta) for v in seq[n:])
        total += w * (truth - (log_marg(seq) - log_marg(seq[:n])))
    return total


class TestKernel:
    def test_jeffreys_posterior_mean_rule(self):
        k = posterior_predictive(BERN, beta_prior(0.5, 0.5), [1, 1, 0, 1, 0], 1)
        assert math.exp(k.log_predictive([1])) == pytest.approx(3.5 / 6, rel=1e-14)

    def test_empty_data(self):
        k = posterior_predictive(BERN, beta_prior(2.0, 5.0), [], 1)
        assert math.exp(k.log_predictive([1])) == pytest.approx(2 / 7, rel=1e-14)

    def test_bernoulli_normalises(self):
        k = posterior_predictive(BERN, beta_prior(1.5, 0.7), [1, 0, 0], 3)
        total = sum(math.exp(k.log_predictive(list(y))) for y in itertools.product((0, 1), repeat=3))
        assert total == pytest.approx(1.0, abs=1e-14)

    def test_normal_mean_flat(self):
        x = np.array([0.3, -1.1, 2.0, 0.6])
        k = posterior_predictive(NM, flat(1), x, 1)
        xbar, var = x.mean(), 1.25
        for y in (-1.0, 0.0, 2.5):
            ref = -0.5 * math.log(2 * math.pi * var) - 0.5 * (y - xbar) ** 2 / var
            assert k.log_predictive([y]) == pytest.approx(ref, abs=1e-12)

    def test_normal_ms_kernel_normalises(self):
        from scipy.integrate import quad

        x = np.array([0.3, -1.1, 2.0, 0.6, 1.4])
        k = posterior_predictive(MS, power_sigma(1.0, MS), x, 1)
        total, _ = quad(lambda y: math.exp(k.log_predictive([y])), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_non_conjugate_pair(self):
        with pytest.raises(UnsupportedPairError):
            posterior_predictive(get_model("mvn2"), jeffreys(get_model("mvn2")), np.zeros((3, 2)), 1)
        with pytest.raises(UnsupportedPairError):
            posterior_predictive_regret(get_model("linreg"), flat(3), [0.0, 0.0, 0.0], 4, 1)


class TestBruteForce:
    def test_spec_case(self):
        ours = posterior_predictive_regret(BERN, beta_prior(0.5, 0.5), 0.3, 5, 2)
        assert abs(ours - brute_posterior_regret(0.3, 0.5, 0.5, 5, 2)) < 1e-12

    @pytest.mark.parametrize("a, b", [(0.5, 0.5), (2.0, 3.0), (1.5, 1.5)])
    @pytest.mark.parametrize("n, m", [(0, 1), (3, 4), (7, 2), (10, 4)])
    def test_posterior_regret(self, a, b, n, m):
        for th in (0.2, 0.5):
            ours = posterior_predictive_regret(BERN, beta_prior(a, b), th, n, m)
            assert abs(ours - brute_posterior_regret(th, a, b, n, m)) < 1e-12

    def test_prior_regret(self):
        for n in (1, 4, 10):
            ours = prior_predictive_regret(BERN, beta_prior(0.5, 0.5), 0.5, n)
            assert abs(ours - brute_prior_regret(0.5, 0.5, 0.5, n)) < 1e-12

    def test_boundary_truth(self):
        ours = posterior_predictive_regret(BERN, beta_prior(1.5, 1.5), 0.0, 6, 2)
        assert abs(ours - brute_posterior_regret(0.0, 1.5, 1.5, 6, 2)) < 1e-12

    def test_mixture_truth(self):
        tau = DiscretePrior((0.3, 0.7), (0.5, 0.5))
        ours = posterior_predictive_regret(BERN, beta_prior(2.0, 2.0), tau, 4, 2)
        assert abs(ours - brute_mixture_regret((0.3, 0.7), (0.5, 0.5), 2.0, 2.0, 4, 2)) < 1e-12

    def test_generic_prior_quadrature(self):
        comps = [(2.0, 3.0), (4.0, 1.5)]
        ours = posterior_predictive_regret(BERN, _beta_mix(comps), 0.35, 5, 3)
        assert abs(ours - _brute_mix_post_regret(0.35, comps, 5, 3)) < 1e-10


class TestProperties:
    def test_zero_prediction(self):
        assert posterior_predictive_regret(BERN, beta_prior(2, 2), 0.4, 5, 0) == 0.0

    def test_zero_data(self):
        assert prior_predictive_regret(BERN, beta_prior(2, 2), 0.4, 0) == 0.0

    def test_point_mass_prior(self):
        assert posterior_predictive_regret(NM, normal_prior(0.8, 0.0), [0.8], 6, 3) == pytest.approx(0.0, abs=1e-14)

    def test_jeffreys_loss_zero(self):
        for model, th in ((BERN, 0.3), (NM, [0.2]), (MS, [0.0, 2.0])):
            assert predictive_loss_finite(model, jeffreys(model), th, 8, 3) == 0.0

    def test_equalizer_constant_in_theta(self):
        pr = power_sigma(1.0, MS)
        a = predictive_loss_finite(MS, pr, [0.0, 1.0], 10, 4)
        b = predictive_loss_finite(MS, pr, [3.0, 0.2], 10, 4)
        assert a == b

    def test_improper_posterior_flagged(self):
        assert posterior_predictive_regret(MS, power_sigma(0.0, MS), [0.0, 1.0], 1, 1) == math.inf

    @given(st.floats(0.0, 1.0), st.floats(0.2, 4.0), st.floats(0.2, 4.0), st.integers(0, 30), st.integers(1, 6))
    @settings(max_examples=60, deadline=None)
    def test_non_negative(self, th, a, b, n, m):
        assert posterior_predictive_regret(BERN, beta_prior(a, b), th, n, m) >= -1e-12
        assert prior_predictive_regret(BERN, beta_prior(a, b), th, n) >= -1e-12

    @given(st.floats(-3, 3), st.integers(1, 40), st.integers(1, 10))
    @settings(max_examples=30, deadline=None)
    def test_non_negative_normal(self, th, n, m):
        assert posterior_predictive_regret(NM, normal_prior(0.0, 2.0), [th], n, m) >= -1e-12
        assert prior_predictive_regret(NM, normal_prior(0.0, 2.0), [th], n) >= -1e-12

    def test_normal_prior_closed_form(self):
        # at theta = prior mean, xbar ~ N(0, 1/n) against the marginal N(0, 2 + 1/n)
        for n in (1, 5, 50):
            ref = 0.5 * math.log(1 + 2 * n) - 0.5 * (1 - 1 / (1 + 2 * n))
            assert prior_predictive_regret(NM, normal_prior(0.0, 2.0), [0.0], n) == pytest.approx(ref, abs=1e-12)

    def test_negative_sizes(self):
        with pytest.raises(DomainError):
            posterior_predictive_regret(BERN, beta_prior(2, 2), 0.3, -1, 1)


class TestChainRule:
    @pytest.mark.parametrize("model, prior, th", [
        (BERN, beta_prior(0.5, 0.5), 0.3),
        (BERN, beta_prior(2.0, 3.0), 0.0),
        (NM, normal_prior(0.5, 2.0), [0.1]),
        (NM, exp_tilt(0.7), [-0.4]),
        (MS, power_sigma(1.0, MS), [0.0, 1.5]),
        (LS, power_sigma(3.0, LS), [1.0, -0.5]),
    ])
    def test_chain(self, model, prior, th):
        n, m = 5, 3
        resid = joint_regret(model, prior, th, n, m) - prior_predictive_regret(model, prior, th, n) \
            - posterior_predictive_regret(model, prior, th, n, m)
        assert abs(resid) < 1e-10

    def test_identities(self):
        tau = DiscretePrior((0.25, 0.8), (0.4, 0.6))
        for pr in (beta_prior(0.5, 0.5), beta_prior(2.0, 3.0)):
            res = identity_residuals(BERN, pr, tau, 0.3, 5, 3)
            assert all(abs(v) < 1e-10 for v in res.values())


class TestMonteCarlo:
    @pytest.mark.parametrize("model, prior, th", [
        (NM, normal_prior(0.0, 2.0), [0.7]),
        (MS, power_sigma(1.0, MS), [0.5, 2.0]),
        (LS, power_sigma(2.0, LS), [0.0, 0.3]),
    ])
    def test_within_three_se(self, model, prior, th):
        exact = posterior_predictive_regret(model, prior, th, 6, 2)
        for seed in (1, 2, 3):
            mean, se = mc_regret(model, prior, th, 6, 2, seed=seed, replicates=2000)
            assert abs(mean - exact) < 3 * se

    def test_reproducible(self):
        a = mc_regret(NM, flat(1), [0.0], 4, 1, seed=9, replicates=200)
        assert a == mc_regret(NM, flat(1), [0.0], 4, 1, seed=9, replicates=200)


class TestConvergence:
    def test_c_n(self):
        assert c_n(100, 100) == 400.0

    def test_schedules(self):
        assert m_schedule([4, 10], "sqrt") == [(4, 2), (10, 4)]
        assert m_schedule([4, 10], "1") == [(4, 1), (10, 1)]
        with pytest.raises(DomainError):
            m_schedule([4], "log")

    def test_near_limit(self):
        val = c_n(256, 256) * predictive_loss_finite(BERN, beta_prior(1.5, 1.5), 0.3, 256, 256)
        assert abs(val + 4.0) < 0.05

    @pytest.mark.parametrize("rule", ["n", "sqrt", "1"])
    def test_errors_shrink(self, rule):
        tab = convergence_table(BERN, beta_prior(1.5, 1.5), [0.3], m_schedule([32, 64, 128, 256], rule))
        errs = [r[-1] for r in tab.rows()]
        assert tab.L_limit == pytest.approx(-4.0, abs=1e-6)
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_normal_tilt_exact(self):
        c = 0.7
        for n in (4, 32):
            assert c_n(n, 3) * predictive_loss_finite(NM, exp_tilt(c), [0.2], n, 3) == pytest.approx(c**2, rel=1e-10)


class TestClarkeBarron:
    def test_first_order_vanishes(self):
        vals = [abs(clarke_barron_residual(BERN, beta_prior(2, 2), [0.5], n)[0]) for n in (64, 128, 256, 512)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.01

    def test_second_order_small(self):
        _, so = clarke_barron_residual(BERN, beta_prior(2, 2), [0.5], 512)
        half_loss = abs(float(predictive_loss(BERN, beta_prior(2, 2), [0.5]))) / 2
        assert abs(so) < 0.2 * half_loss

    def test_jeffreys_second_order_zero(self):
        fo, so = clarke_barron_residual(BERN, jeffreys(BERN), [0.3], 100)
        assert so == pytest.approx(0.0, abs=1e-12)
        assert isinstance(fo, float) and isinstance(so, float)


class TestScoringRule:
    def test_tau_ranks_first(self):
        tau = DiscretePrior((0.3, 0.7), (0.5, 0.5), name="tau")
        rep = scoring_rule_check(BERN, tau, [beta_prior(0.5, 0.5), tau, beta_prior(2, 2)], 4, 2)
        assert rep.best == "tau"
        assert all(abs(r) < 1e-10 for r in rep.decomposition_residuals)

    def test_single_candidate(self):
        tau = DiscretePrior((0.1, 0.5, 0.6), (1, 2, 1), name="tau")
        rep = scoring_rule_check(BERN, tau, [tau], 3, 2)
        assert rep.best == "tau" and rep.values[0] == pytest.approx(mixture_regret(BERN, tau, tau, 3, 2))

    def test_discrete_prior_validation(self):
        with pytest.raises(DomainError):
            DiscretePrior((0.1, 0.2), (1.0,))
        with pytest.raises(DomainError):
            DiscretePrior((0.1,), (-1.0,))
