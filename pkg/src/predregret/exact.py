"""Finite-sample predictive regret.

Exact paths exist for the conjugate pairs: Bernoulli with beta (or
finitely supported, or any normalised) priors, the unit-variance normal mean
with normal, flat or exponentially tilted priors, and the normal location-scale
model with ``sigma**-a`` priors. Anything else goes through ``mc_regret``.

Bernoulli computations use the sufficient success count: with ``M(s, N)`` the
log prior-marginal probability of one particular sequence of length ``N``
holding ``s`` successes, the predictive probability of a ``y`` sequence with
``t`` successes after ``x`` with ``s`` successes is
``exp(M(s + t, n + m) - M(s, n))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import betaln, digamma, gammaln, logsumexp, xlog1py, xlogy

from .asymptotics import predictive_loss
from .errors import DomainError, UnsupportedPairError
from .models import ModelFamily, bernoulli, check_theta, fisher_info
from .numerics import SeededStream, expect_log_weighted, gauss_hermite, gauss_legendre, mc_mean
from .priors import PriorSpec, jeffreys

LOG_2PI = math.log(2.0 * math.pi)
HERMITE_NODES = 64
GENERIC_NODES = 512
_BERNOULLI = bernoulli()


@dataclass(frozen=True)
class DiscretePrior:
    """Finitely supported prior ``sum_i w_i delta(theta_i)``."""

    atoms: tuple
    weights: tuple
    name: str = "discrete"

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if a.ndim != 1 or a.shape != w.shape or a.size == 0:
            raise DomainError("atoms and weights must be matching non-empty 1-d sequences")
        if np.any(w <= 0):
            raise DomainError("weights must be positive")
        object.__setattr__(self, "atoms", tuple(float(v) for v in a))
        object.__setattr__(self, "weights", tuple(float(v) for v in w / w.sum()))

    @property
    def family(self):
        return "discrete"


@dataclass(frozen=True)
class PredictiveKernel:
    pair: str
    hyper: dict
    m: int
    log_predictive: Callable = field(repr=False)  # y (length m) -> log p(y|x)


@dataclass(frozen=True)
class RegretPoint:
    n: int
    m: int
    theta: tuple
    d_post: float
    d_prior: float
    L_post: float
    c_n: float

    @property
    def cnL(self) -> float:
        return self.c_n * self.L_post


@dataclass(frozen=True)
class ConvergenceTable:
    model: str
    prior: str
    theta: tuple
    L_limit: float
    points: list

    def rows(self):
        """``(n, m, c_n, cnL, L_limit, abs_err)`` per schedule entry."""
        return [
            (p.n, p.m, p.c_n, p.cnL, self.L_limit, abs(p.cnL - self.L_limit)) for p in self.points
        ]


@dataclass(frozen=True)
class ScoringReport:
    names: list
    values: list
    best: str
    decomposition_residuals: list


def c_n(n: int, m: int) -> float:
    """Normalisation ``2 n (n + m) / m``."""
    if m <= 0:
        raise DomainError("m must be positive")
    return 2.0 * n * (n + m) / m


def m_schedule(n_values: Sequence[int], rule: str = "n") -> list:
    """``(n, m_n)`` pairs for the rules ``n``, ``sqrt`` and ``1``."""
    rules = {"n": lambda n: n, "sqrt": lambda n: math.ceil(math.sqrt(n)), "1": lambda n: 1}
    if rule not in rules:
        raise DomainError(f"unknown m rule {rule!r}; expected one of {sorted(rules)}")
    return [(int(n), int(rules[rule](n))) for n in n_values]


def _check_nm(n, m=1):
    if n < 0 or m < 0 or int(n) != n or int(m) != m:
        raise DomainError(f"sample sizes must be non-negative integers (n={n}, m={m})")


# ---------------------------------------------------------------------------
# Bernoulli
# ---------------------------------------------------------------------------

def _seq_logprob(theta):
    return lambda s, N: xlogy(s, theta) + xlog1py(N - s, -theta)


def _bern_log_marginal(prior) -> Callable:
    """``M(s, N)`` for a prior on the success probability."""
    if isinstance(prior, DiscretePrior):
        th = np.asarray(prior.atoms)
        lw = np.log(np.asarray(prior.weights))

        def disc(s, N):
            s = np.asarray(s, dtype=float)[..., None]
            return logsumexp(lw + xlogy(s, th) + xlog1py(N - s, -th), axis=-1)

        return disc
    if prior.family == "beta":
        a, b = prior.params["a"], prior.params["b"]
    elif prior.family == "jeffreys" and prior.params.get("model") == "bernoulli":
        a = b = 0.5
    elif prior.family == "flat" and prior.p == 1 and tuple(prior.bounds_or_default()[0]) in ((0.0, 1.0), (-np.inf, np.inf)):
        a = b = 1.0
    else:
        return _bern_generic_marginal(prior)
    return lambda s, N: betaln(a + s, b + N - s) - betaln(a, b)


def _bern_generic_marginal(prior: PriorSpec) -> Callable:
    # theta = sin(eta)**2 absorbs inverse square-root endpoint behaviour
    if not prior.proper or prior.normalizer is None:
        raise UnsupportedPairError(f"{prior.name}: Bernoulli marginal needs a normalised prior")
    rule = gauss_legendre(GENERIC_NODES, 0.0, math.pi / 2)
    eta = rule.nodes
    th = np.sin(eta) ** 2
    with np.errstate(divide="ignore"):
        base = (
            np.log(rule.weights)
            + np.log(np.sin(2.0 * eta))
            + np.asarray(prior.log_pi(th[:, None]), dtype=float)
            - prior.normalizer
        )

    def generic(s, N):
        s = np.asarray(s, dtype=float)[..., None]
        return logsumexp(base + xlogy(s, th) + xlog1py(N - s, -th), axis=-1)

    return generic


def _bern_truth(truth):
    if isinstance(truth, DiscretePrior):
        return _bern_log_marginal(truth)
    th = float(np.asarray(truth, dtype=float).reshape(-1)[0])
    if not 0.0 <= th <= 1.0:
        raise DomainError(f"Bernoulli parameter {th} outside [0, 1]")
    return _seq_logprob(th)


def _log_choose(N, k):
    return gammaln(N + 1.0) - gammaln(k + 1.0) - gammaln(N - k + 1.0)


def _bern_cells(truth, n, m):
    s = np.arange(n + 1, dtype=float)[:, None]
    t = np.arange(m + 1, dtype=float)[None, :]
    T = _bern_truth(truth)
    log_w = _log_choose(n, s) + _log_choose(m, t) + T(s + t, n + m)
    return s, t, T, log_w


def _bern_post_regret(truth, prior, n, m):
    s, t, T, log_w = _bern_cells(truth, n, m)
    P = _bern_log_marginal(prior)
    with np.errstate(invalid="ignore"):
        vals = (T(s + t, n + m) - T(s, n)) - (P(s + t, n + m) - P(s, n))
    return expect_log_weighted(log_w, vals)


def _bern_loss(truth, prior, n, m):
    s, _, _, log_w = _bern_cells(truth, n, m)
    t = np.arange(m + 1, dtype=float)[None, :]
    P = _bern_log_marginal(prior)
    J = _bern_log_marginal(jeffreys(_BERNOULLI))
    vals = (J(s + t, n + m) - J(s, n)) - (P(s + t, n + m) - P(s, n))
    return expect_log_weighted(log_w, vals)


def _bern_prior_regret(truth, prior, n):
    s = np.arange(n + 1, dtype=float)
    T = _bern_truth(truth)
    P = _bern_log_marginal(prior)
    log_w = _log_choose(n, s) + T(s, n)
    with np.errstate(invalid="ignore"):
        return expect_log_weighted(log_w, T(s, n) - P(s, n))


# ---------------------------------------------------------------------------
# normal mean, unit variance
# ---------------------------------------------------------------------------

def _nm_posterior(prior, n, xbar):
    """Posterior mean and variance of the normal mean after ``n`` draws."""
    fam = prior.family
    if fam in ("flat", "jeffreys"):
        if n == 0:
            return None
        return xbar, 1.0 / n
    if fam == "exp-tilt":
        if n == 0:
            return None
        return xbar + prior.params["c"] / n, 1.0 / n
    if fam == "normal":
        mu0, v0 = prior.params["mean"], prior.params["var"]
        if v0 == 0.0:
            return mu0 + 0.0 * xbar, 0.0
        v = 1.0 / (1.0 / v0 + n)
        return v * (mu0 / v0 + n * xbar), v
    raise UnsupportedPairError(f"normal-mean with prior family {fam!r}")


def _nm_canonical_log_pi(prior, th):
    fam = prior.family
    if fam in ("flat", "jeffreys"):
        return 0.0
    if fam == "exp-tilt":
        return prior.params["c"] * (th - prior.params["theta0"])
    mu0, v0 = prior.params["mean"], prior.params["var"]
    if v0 == 0.0:
        raise DomainError("point-mass prior has no density")
    return -0.5 * (LOG_2PI + math.log(v0)) - 0.5 * (th - mu0) ** 2 / v0


def _nm_log_smooth(prior, xbar, N):
    """``log int N(u; xbar, 1/N) pi(u) du`` for the canonical prior density."""
    fam = prior.family
    if fam in ("flat", "jeffreys"):
        return np.zeros_like(xbar)
    if fam == "exp-tilt":
        c = prior.params["c"]
        return c * (xbar - prior.params["theta0"]) + c * c / (2.0 * N)
    mu0, v0 = prior.params["mean"], prior.params["var"]
    v = v0 + 1.0 / N
    return -0.5 * (LOG_2PI + np.log(v)) - 0.5 * (xbar - mu0) ** 2 / v


def _nm_post_regret(prior, th, n, m):
    rule = gauss_hermite(HERMITE_NODES, th, 1.0 / math.sqrt(n) if n else 1.0)
    post = _nm_posterior(prior, n, rule.nodes)
    if post is None:
        return math.inf
    mu, v = post
    mv = m * v
    kl = 0.5 * (-mv / (1.0 + mv) + m * (th - mu) ** 2 / (1.0 + mv) + math.log1p(mv))
    return float(np.dot(rule.weights, kl))


def _nm_prior_regret(prior, th, n):
    if n == 0:
        return 0.0
    if prior.family == "normal" and prior.params["var"] == 0.0:
        raise DomainError("point-mass prior: the marginal of X is singular")
    rule = gauss_hermite(HERMITE_NODES, th, 1.0 / math.sqrt(n))
    smooth = float(np.dot(rule.weights, _nm_log_smooth(prior, rule.nodes, n)))
    offset = float(np.asarray(prior.log_pi(np.array([th])))) - _nm_canonical_log_pi(prior, th)
    if prior.normalizer is not None:
        offset -= prior.normalizer
    return 0.5 * math.log(n / (2.0 * math.pi * math.e)) - smooth - offset


def _nm_kernel(prior, x, m):
    n = len(x)
    xbar = float(np.mean(x)) if n else 0.0
    post = _nm_posterior(prior, n, xbar)
    if post is None:
        raise DomainError("flat-type prior with no data: the predictive is improper")
    mu, v = float(post[0]), float(post[1])

    def log_pred(y):
        y = np.asarray(y, dtype=float)
        mm = y.size
        ss = float(np.sum((y - mu) ** 2))
        dev = float(np.sum(y - mu))
        return -0.5 * mm * LOG_2PI - 0.5 * math.log1p(mm * v) - 0.5 * (ss - v * dev**2 / (1.0 + mm * v))

    return PredictiveKernel("normal-mean/" + prior.family, {"mean": mu, "var": v, "n": n}, m, log_pred)


# ---------------------------------------------------------------------------
# normal location-scale with sigma**-a priors
# ---------------------------------------------------------------------------

def _ms_exponent(model, prior):
    fam = prior.family
    if fam == "power-sigma":
        return prior.params["a"]
    if fam == "jeffreys":
        return 2.0
    if fam == "flat":
        return 0.0 if model.name == "normal-ms" else 1.0
    raise UnsupportedPairError(f"{model.name} with prior family {fam!r}")


def _ms_sigma(model, th):
    b, s = float(th[0]), float(th[1])
    return b, (s if model.name == "normal-ms" else math.exp(s))


def _ms_canonical_log_pi(model, a, th):
    _, sig = _ms_sigma(model, th)
    # density of sigma**-a carried to the model's own coordinates
    return -a * math.log(sig) + (math.log(sig) if model.name == "normal-ls" else 0.0)


def _ms_finite(a, N):
    return N >= 2 and a + N - 2 > 0


def _ms_post_regret(a, n, m):
    if not _ms_finite(a, n):
        return math.inf
    N = n + m
    return (
        -0.5 * m
        + 0.5 * math.log(N / n)
        - gammaln((a + N - 2) / 2.0)
        + gammaln((a + n - 2) / 2.0)
        + (a + N - 2) / 2.0 * digamma((N - 1) / 2.0)
        - (a + n - 2) / 2.0 * digamma((n - 1) / 2.0)
    )


def _ms_prior_regret(model, prior, a, th, n):
    if n == 0:
        return 0.0
    if not _ms_finite(a, n):
        return math.inf
    _, sig = _ms_sigma(model, th)
    core = (
        -0.5 * LOG_2PI
        - 0.5 * n
        + 0.5 * math.log(n)
        + math.log(2.0)
        - gammaln((n + a - 2) / 2.0)
        + (n + a - 2) / 2.0 * digamma((n - 1) / 2.0)
        + (a - 2.0) * math.log(sig)
    )
    offset = float(np.asarray(prior.log_pi(np.asarray(th)))) - _ms_canonical_log_pi(model, a, th)
    if prior.normalizer is not None:
        offset -= prior.normalizer
    return core - offset


def _ms_log_marginal(a, x):
    x = np.asarray(x, dtype=float)
    N = x.size
    S = float(np.sum((x - x.mean()) ** 2))
    k = (N + a - 2) / 2.0
    return (
        -(N - 1) / 2.0 * LOG_2PI - 0.5 * math.log(N) - math.log(2.0) + gammaln(k) - k * math.log(S / 2.0)
    )


def _ms_kernel(model, prior, x, m):
    a = _ms_exponent(model, prior)
    x = np.asarray(x, dtype=float)
    if not _ms_finite(a, x.size):
        raise DomainError(f"sigma^-{a} prior with n={x.size}: the posterior is improper")
    base = _ms_log_marginal(a, x)

    def log_pred(y):
        return _ms_log_marginal(a, np.concatenate([x, np.asarray(y, dtype=float).reshape(-1)])) - base

    return PredictiveKernel(model.name + "/power-sigma", {"a": a, "n": x.size}, m, log_pred)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def _family(prior):
    return "discrete" if isinstance(prior, DiscretePrior) else prior.family


def _theta_for(model, theta):
    if isinstance(theta, DiscretePrior):
        if model.name != "bernoulli":
            raise UnsupportedPairError("mixture truths are only supported for the Bernoulli model")
        return theta
    if model.name == "bernoulli":
        # the exact path accepts the closed unit interval
        return float(np.asarray(theta, dtype=float).reshape(-1)[0])
    return check_theta(model, theta)


def posterior_predictive(model: ModelFamily, prior, x, m: int) -> PredictiveKernel:
    """Exact posterior predictive for ``m`` future observations given data ``x``."""
    _check_nm(0, m)
    x = np.asarray(x, dtype=float).reshape(-1)
    if model.name == "bernoulli":
        P = _bern_log_marginal(prior)
        s, n = float(x.sum()), x.size
        base = float(P(s, n))

        def log_pred(y):
            y = np.asarray(y, dtype=float).reshape(-1)
            return float(P(s + y.sum(), n + y.size)) - base

        return PredictiveKernel("bernoulli/" + _family(prior), {"s": s, "n": n}, m, log_pred)
    if isinstance(prior, DiscretePrior):
        raise UnsupportedPairError(f"{model.name} with a discrete prior")
    if model.name == "normal-mean":
        return _nm_kernel(prior, x, m)
    if model.name in ("normal-ms", "normal-ls"):
        return _ms_kernel(model, prior, x, m)
    raise UnsupportedPairError(f"no exact predictive for {model.name}")


def posterior_predictive_regret(model: ModelFamily, prior, theta, n: int, m: int) -> float:
    """``d_{Y|X}(theta, pi)``; ``theta`` may be a ``DiscretePrior`` for Bernoulli.

    Returns ``inf`` when the posterior after ``n`` observations is improper.
    """
    _check_nm(n, m)
    th = _theta_for(model, theta)
    if m == 0:
        return 0.0
    if model.name == "bernoulli":
        return _bern_post_regret(th, prior, n, m)
    if isinstance(prior, DiscretePrior):
        raise UnsupportedPairError(f"{model.name} with a discrete prior")
    if model.name == "normal-mean":
        return _nm_post_regret(prior, float(th[0]), n, m)
    if model.name in ("normal-ms", "normal-ls"):
        return _ms_post_regret(_ms_exponent(model, prior), n, m)
    raise UnsupportedPairError(f"no exact regret for {model.name}; use mc_regret")


def predictive_loss_finite(model: ModelFamily, prior, theta, n: int, m: int) -> float:
    """``L_{Y|X}(theta, pi) = d_{Y|X}(theta, pi) - d_{Y|X}(theta, pi^J)``.

    For Bernoulli the two predictive log-probabilities are differenced cell by
    cell before averaging, which keeps the small loss free of cancellation.
    """
    _check_nm(n, m)
    th = _theta_for(model, theta)
    if m == 0:
        return 0.0
    if model.name == "bernoulli":
        return _bern_loss(th, prior, n, m)
    return posterior_predictive_regret(model, prior, theta, n, m) - posterior_predictive_regret(
        model, jeffreys(model), theta, n, m
    )


def prior_predictive_regret(model: ModelFamily, prior, theta, n: int) -> float:
    """``d_X(theta, pi) = D(p(X|theta) || p^pi(X))``.

    Improper priors enter with the density exactly as given by ``log_pi``.
    """
    _check_nm(n)
    th = _theta_for(model, theta)
    if model.name == "bernoulli":
        return _bern_prior_regret(th, prior, n)
    if isinstance(prior, DiscretePrior):
        raise UnsupportedPairError(f"{model.name} with a discrete prior")
    if model.name == "normal-mean":
        return _nm_prior_regret(prior, float(th[0]), n)
    if model.name in ("normal-ms", "normal-ls"):
        return _ms_prior_regret(model, prior, _ms_exponent(model, prior), th, n)
    raise UnsupportedPairError(f"no exact prior predictive regret for {model.name}")


def joint_regret(model: ModelFamily, prior, theta, n: int, m: int) -> float:
    """``d_{X,Y}``: the prior predictive regret of all ``n + m`` observations."""
    return prior_predictive_regret(model, prior, theta, n + m)


def mc_regret(model: ModelFamily, prior, theta, n: int, m: int, seed: int, replicates: int = 2000,
              stream_id: int = 0):
    """Monte Carlo ``d_{Y|X}`` with its standard error."""
    _check_nm(n, m)
    th = check_theta(model, theta)

    def draw(rng):
        return model.sampler(th, n, rng), model.sampler(th, m, rng)

    def stat(xy):
        x, y = xy
        kernel = posterior_predictive(model, prior, x, m)
        return float(np.sum(model.log_f(np.asarray(y), th))) - kernel.log_predictive(y)

    return mc_mean(SeededStream(seed, stream_id), draw, stat, replicates)


def clarke_barron_residual(model: ModelFamily, prior, theta, n: int):
    """``(first_order, second_order)`` remainders of the prior predictive regret.

    ``first_order = d_X - [p/2 log(n / 2 pi e) + log(|i|^{1/2} / pi)]`` and
    ``second_order = n (first_order(pi) - first_order(pi^J)) + L(theta, pi) / 2``.
    """
    th = check_theta(model, theta)

    def first(pr):
        dens = float(np.asarray(pr.log_pi(th)))
        if pr.normalizer is not None:
            dens -= pr.normalizer
        half_logdet = 0.5 * np.linalg.slogdet(fisher_info(model, th))[1]
        lead = 0.5 * model.p * math.log(n / (2.0 * math.pi * math.e)) + half_logdet - dens
        return prior_predictive_regret(model, pr, th, n) - lead

    fo = first(prior)
    fj = first(jeffreys(model))
    return float(fo), float(n * (fo - fj) + 0.5 * float(predictive_loss(model, prior, th)))


def regret_point(model: ModelFamily, prior, theta, n: int, m: int) -> RegretPoint:
    th = _theta_for(model, theta)
    return RegretPoint(
        n=n, m=m, theta=tuple(np.atleast_1d(th).tolist()),
        d_post=posterior_predictive_regret(model, prior, theta, n, m),
        d_prior=prior_predictive_regret(model, prior, theta, n),
        L_post=predictive_loss_finite(model, prior, theta, n, m),
        c_n=c_n(n, m),
    )


def convergence_table(model: ModelFamily, prior, theta, schedule) -> ConvergenceTable:
    """``c_n L_{Y|X}`` along ``schedule`` next to the asymptotic loss."""
    th = check_theta(model, theta)
    limit = float(predictive_loss(model, prior, th))
    points = [regret_point(model, prior, th, n, m) for n, m in schedule]
    return ConvergenceTable(model.name, prior.name, tuple(th.tolist()), limit, points)


def mixture_regret(model, truth: DiscretePrior, prior, n, m) -> float:
    """``int d_{Y|X}(theta, pi) dtau(theta)`` for finitely supported ``tau``."""
    return float(sum(w * posterior_predictive_regret(model, prior, a, n, m)
                     for a, w in zip(truth.atoms, truth.weights)))


def scoring_rule_check(model: ModelFamily, tau: DiscretePrior, candidates, n: int, m: int) -> ScoringReport:
    """Rank candidate priors by their ``tau``-averaged regret."""
    names, values, resid = [], [], []
    conditional_info = mixture_regret(model, tau, tau, n, m)
    for cand in candidates:
        names.append(cand.name)
        avg = mixture_regret(model, tau, cand, n, m)
        values.append(avg)
        resid.append(avg - posterior_predictive_regret(model, cand, tau, n, m) - conditional_info)
    return ScoringReport(names, values, names[int(np.argmin(values))], resid)


def identity_residuals(model: ModelFamily, prior, tau: DiscretePrior, theta, n: int, m: int) -> dict:
    """Residuals of the chain rule, the decomposition and the information identity.

    Each should vanish to rounding error on the exact paths.
    """
    chain = joint_regret(model, prior, theta, n, m) - prior_predictive_regret(model, prior, theta, n) \
        - posterior_predictive_regret(model, prior, theta, n, m)
    d_tau = posterior_predictive_regret(model, prior, tau, n, m)
    decomposition = mixture_regret(model, tau, prior, n, m) - d_tau - mixture_regret(model, tau, tau, n, m)
    loss_tau = float(sum(w * predictive_loss_finite(model, prior, a, n, m)
                         for a, w in zip(tau.atoms, tau.weights)))
    zeta = posterior_predictive_regret(model, jeffreys(model), tau, n, m)
    return {"chain_rule": chain, "decomposition": decomposition, "information": d_tau - loss_tau - zeta}
