"""Prior densities as log-density objects.

A :class:`PriorSpec` holds ``log pi`` up to an additive constant, optional
closed-form gradient and Hessian, the open box on which it is defined and
properness metadata. Derivatives fall back to Richardson-refined central
differences when no closed form is registered.

Also here: Jeffreys priors, the smooth compactly supported densities built
from ``U = 2V - 1`` with ``V ~ Beta(a, b)``, ``a, b > 3``, and the compact
prior sequences ``tau_k`` obtained by scaling them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import betaln

from .errors import ConfigurationError, DomainError, InvalidHClassError
from .models import BOUNDARY_TOL, ModelFamily, ReparamMap, fisher_info
from .numerics import GRAD_STEP, HESS_STEP, adaptive_integrate, central_diff


@dataclass(frozen=True, eq=False)
class PriorSpec:
    name: str
    p: int
    log_pi: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    bounds: Optional[tuple] = None
    proper: bool = False
    normalizer: Optional[float] = None
    compact: bool = False
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def shifted(self, const: float) -> "PriorSpec":
        """Same prior with ``const`` added to the log density."""
        base = self.log_pi
        return replace(
            self,
            log_pi=lambda t: base(t) + const,
            normalizer=None if self.normalizer is None else self.normalizer + const,
        )

    def log_density(self, theta):
        """Normalised log density (proper priors with a known normalizer)."""
        if self.normalizer is None:
            raise ConfigurationError(f"{self.name}: no normalizer (improper or unknown)")
        return self.log_pi(np.asarray(theta, dtype=float)) - self.normalizer

    def bounds_or_default(self):
        return self.bounds if self.bounds is not None else tuple([(-np.inf, np.inf)] * self.p)


def _check_inside(prior: PriorSpec, t):
    for i, (lo, hi) in enumerate(prior.bounds_or_default()):
        c = t[..., i]
        if np.any(c <= lo + BOUNDARY_TOL) or np.any(c >= hi - BOUNDARY_TOL) or not np.all(np.isfinite(c)):
            raise DomainError(f"{prior.name}: coordinate {i} = {c} not interior to ({lo}, {hi})")


def _capped_step(prior, t, base):
    lo = np.array([b[0] for b in prior.bounds_or_default()])
    hi = np.array([b[1] for b in prior.bounds_or_default()])
    dist = np.minimum(t - lo, hi - t)
    return np.minimum(base * np.maximum(1.0, np.abs(t)), 0.01 * dist)


def rho_derivatives(prior: PriorSpec, theta):
    """Value, gradient and Hessian of ``rho = log pi`` at ``theta``.

    Accepts a single point ``(p,)`` or a batch ``(..., p)``.
    """
    t = np.asarray(theta, dtype=float)
    if t.ndim == 0:
        t = t[None]
    _check_inside(prior, t)
    value = np.asarray(prior.log_pi(t), dtype=float)
    if prior.grad is not None:
        grad = np.asarray(prior.grad(t), dtype=float)
    else:
        grad = central_diff(prior.log_pi, t, order=1, step=_capped_step(prior, t, GRAD_STEP))
    if prior.hess is not None:
        hess = np.asarray(prior.hess(t), dtype=float)
    else:
        hess = central_diff(prior.log_pi, t, order=2, step=_capped_step(prior, t, HESS_STEP))
    return value, grad, hess


# ---------------------------------------------------------------------------
# standard families
# ---------------------------------------------------------------------------

def flat(p: int = 1, bounds=None) -> PriorSpec:
    return PriorSpec(
        name="flat", p=p, log_pi=lambda t: np.zeros(np.shape(t)[:-1]),
        grad=lambda t: np.zeros(np.shape(t)), hess=lambda t: np.zeros(np.shape(t) + (p,)),
        bounds=bounds, family="flat",
    )


def beta_prior(a: float, b: float) -> PriorSpec:
    if a <= 0 or b <= 0:
        raise ConfigurationError(f"beta prior needs a, b > 0 (got {a}, {b})")

    def log_pi(t):
        th = t[..., 0]
        return (a - 1.0) * np.log(th) + (b - 1.0) * np.log1p(-th)

    return PriorSpec(
        name=f"beta:{a:g},{b:g}", p=1, log_pi=log_pi,
        grad=lambda t: ((a - 1.0) / t[..., 0] - (b - 1.0) / (1.0 - t[..., 0]))[..., None],
        hess=lambda t: (-(a - 1.0) / t[..., 0] ** 2 - (b - 1.0) / (1.0 - t[..., 0]) ** 2)[..., None, None],
        bounds=((0.0, 1.0),), proper=True, normalizer=float(betaln(a, b)),
        family="beta", params={"a": float(a), "b": float(b)},
    )


def exp_tilt(c: float, theta0: float = 0.0) -> PriorSpec:
    """Improper ``pi(theta) ~ exp{c (theta - theta0)}`` on the real line."""
    return PriorSpec(
        name=f"exp-tilt:{c:g}", p=1, log_pi=lambda t: c * (t[..., 0] - theta0),
        grad=lambda t: np.full(np.shape(t), float(c)), hess=lambda t: np.zeros(np.shape(t) + (1,)),
        family="exp-tilt", params={"c": float(c), "theta0": float(theta0)},
    )


def normal_prior(mean: float, var: float) -> PriorSpec:
    """Normal prior for a location parameter; ``var = 0`` is a point mass."""
    if var < 0:
        raise ConfigurationError("normal prior variance must be non-negative")
    if var == 0:

        def log_pi(t):
            raise DomainError("a point-mass prior has no Lebesgue density")

        return PriorSpec(name=f"normal:{mean:g},0", p=1, log_pi=log_pi, proper=True,
                         family="normal", params={"mean": float(mean), "var": 0.0})
    return PriorSpec(
        name=f"normal:{mean:g},{var:g}", p=1,
        log_pi=lambda t: -0.5 * (t[..., 0] - mean) ** 2 / var,
        grad=lambda t: (-(t[..., 0] - mean) / var)[..., None],
        hess=lambda t: np.full(np.shape(t) + (1,), -1.0 / var),
        proper=True, normalizer=float(0.5 * np.log(2.0 * np.pi * var)),
        family="normal", params={"mean": float(mean), "var": float(var)},
    )


def power_sigma(a: float, model: ModelFamily) -> PriorSpec:
    """``pi(theta) ~ sigma**(-a)``, expressed in the model's own coordinates.

    With a log-scale coordinate ``lambda = log sigma`` the Jacobian turns this
    into ``exp{-(a - 1) lambda}``.
    """
    if model.scale_index is None:
        raise ConfigurationError(f"power-sigma prior needs a scale parameter; {model.name} has none")
    j, p = model.scale_index, model.p
    if model.scale_form == "sigma":
        coef, form = -float(a), "log"
    else:
        coef, form = -(float(a) - 1.0), "linear"

    def log_pi(t):
        s = t[..., j]
        return coef * (np.log(s) if form == "log" else s)

    def grad(t):
        out = np.zeros(np.shape(t))
        out[..., j] = coef / t[..., j] if form == "log" else coef
        return out

    def hess(t):
        out = np.zeros(np.shape(t) + (p,))
        if form == "log":
            out[..., j, j] = -coef / t[..., j] ** 2
        return out

    return PriorSpec(name=f"power-sigma:{a:g}", p=p, log_pi=log_pi, grad=grad, hess=hess,
                     bounds=model.bounds, family="power-sigma", params={"a": float(a)})


def mvn_power(a: float, model: ModelFamily) -> PriorSpec:
    """``pi ~ |Sigma|^{-(q+2-a)/2}``, i.e. ``prod psi_i^(2i-q-a-1)`` in mvn2 coordinates."""
    if model.param_shape != "mvn-gamma":
        raise ConfigurationError(f"mvn-power prior needs the mvn2 model, not {model.name}")
    q = model.meta["q"]
    expo = np.array([2 * i - q - a - 1 for i in range(1, q + 1)], dtype=float)

    def log_pi(t):
        return np.sum(expo * np.log(t[..., :q]), axis=-1)

    def grad(t):
        out = np.zeros(np.shape(t))
        out[..., :q] = expo / t[..., :q]
        return out

    def hess(t):
        out = np.zeros(np.shape(t) + (model.p,))
        for i in range(q):
            out[..., i, i] = -expo[i] / t[..., i] ** 2
        return out

    return PriorSpec(name=f"mvn-power:{a:g}", p=model.p, log_pi=log_pi, grad=grad, hess=hess,
                     bounds=model.bounds, family="mvn-power", params={"a": float(a)})


def jeffreys(model: ModelFamily) -> PriorSpec:
    """``pi^J(theta) = |i(theta)|^{1/2}``, unnormalised unless registered proper."""
    form = model.jeffreys_closed
    if form is not None:
        return PriorSpec(
            name="jeffreys", p=model.p, log_pi=form.log_pi, grad=form.grad, hess=form.hess,
            bounds=model.bounds, proper=form.proper, normalizer=form.normalizer,
            family="jeffreys", params={"model": model.name},
        )

    def log_pi(t):
        sign, logdet = np.linalg.slogdet(fisher_info(model, t))
        if np.any(sign <= 0):
            raise DomainError(f"{model.name}: singular Fisher information")
        return 0.5 * logdet

    return PriorSpec(name="jeffreys", p=model.p, log_pi=log_pi, bounds=model.bounds,
                     family="jeffreys", params={"model": model.name})


def transform_prior(prior: PriorSpec, rmap: ReparamMap) -> PriorSpec:
    """Density of the same measure in ``eta`` coordinates: ``pi(theta(eta)) |det J|``."""
    base = prior.log_pi

    def log_pi(e):
        e = np.asarray(e, dtype=float)
        return base(rmap.to_base(e)) + np.linalg.slogdet(rmap.jacobian(e))[1]

    return PriorSpec(name=f"{prior.name}[{rmap.name}]", p=prior.p, log_pi=log_pi, bounds=rmap.bounds,
                     proper=prior.proper, normalizer=prior.normalizer, family="transformed",
                     params={"base": prior, "map": rmap})


# ---------------------------------------------------------------------------
# the smooth compact class and tau_k sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HClassDensity:
    """Density of ``U = 2V - 1`` with ``V ~ Beta(a, b)`` on ``(-1, 1)``.

    ``a, b > 3`` makes ``h``, ``h'`` and ``h''`` vanish at both endpoints.
    """

    a: float = 4.0
    b: float = 4.0

    def __post_init__(self):
        if self.a <= 3 or self.b <= 3:
            raise InvalidHClassError(f"H-class needs a, b > 3 (got a={self.a}, b={self.b})")

    @property
    def log_norm(self) -> float:
        return float(betaln(self.a, self.b) + (self.a + self.b - 1.0) * np.log(2.0))

    def g(self, u):
        u = np.asarray(u, dtype=float)
        return (self.a - 1.0) * np.log1p(u) + (self.b - 1.0) * np.log1p(-u) - self.log_norm

    def h(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) < 1.0
        out = np.zeros(u.shape)
        out[inside] = np.exp(self.g(u[inside]))
        return out

    def g1(self, u):
        u = np.asarray(u, dtype=float)
        return (self.a - 1.0) / (1.0 + u) - (self.b - 1.0) / (1.0 - u)

    def g2(self, u):
        u = np.asarray(u, dtype=float)
        return -(self.a - 1.0) / (1.0 + u) ** 2 - (self.b - 1.0) / (1.0 - u) ** 2

    def dh(self, u):
        return self.g1(u) * self.h(u)

    def d2h(self, u):
        return (self.g2(u) + self.g1(u) ** 2) * self.h(u)


def h_class_alpha(h: HClassDensity, rel_tol: float = 1e-12) -> float:
    """Location Fisher information ``int g'(u)**2 h(u) du`` of ``h``."""
    return adaptive_integrate(lambda u: h.g1(u) ** 2 * h.h(u), (-1.0, 1.0), rel_tol=rel_tol)


CONSTRUCTIONS = ("line-scale", "halfline-shift", "location-logscale", "regression-logscale")


@dataclass(frozen=True)
class CompactPriorSequence:
    construction: str
    h: HClassDensity = field(default_factory=HClassDensity)
    k: float = 1.0
    q: int = 1  # number of location coordinates for regression-logscale

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ConfigurationError(f"unknown construction {self.construction!r}")
        if not self.k > 0:
            raise ConfigurationError("k must be positive")

    def at(self, k: float) -> "CompactPriorSequence":
        return replace(self, k=k)

    @property
    def scales(self) -> np.ndarray:
        """Per-coordinate scale of ``u -> theta``."""
        k = float(self.k)
        if self.construction in ("line-scale", "halfline-shift"):
            return np.array([k])
        q = 1 if self.construction == "location-logscale" else self.q
        return np.array([k * np.exp(k)] * q + [k])

    @property
    def offsets(self) -> np.ndarray:
        if self.construction == "halfline-shift":
            return np.array([self.k + 1.0])
        return np.zeros(len(self.scales))

    @property
    def support(self) -> tuple:
        return tuple((o - s, o + s) for o, s in zip(self.offsets, self.scales))


def _check_construction(seq: CompactPriorSequence, model: ModelFamily):
    c, shape = seq.construction, model.param_shape
    unbounded = all(np.isinf(lo) and np.isinf(hi) for lo, hi in model.bounds)
    if c == "line-scale":
        ok = model.p == 1 and unbounded
    elif c == "halfline-shift":
        ok = model.p == 1 and model.bounds[0] == (0.0, np.inf)
    elif c == "location-logscale":
        ok = model.p == 2 and shape in ("location-logscale", "regression-logscale")
    else:
        ok = shape in ("regression-logscale", "location-logscale") and model.p == seq.q + 1
    if not ok:
        raise ConfigurationError(f"construction {c!r} does not match the parameter space of {model.name}")


def tau_k(seq: CompactPriorSequence, model: Optional[ModelFamily] = None) -> PriorSpec:
    """Proper compact-support prior: independent scaled copies of ``h``.

    Coordinate ``r`` is ``theta_r = offset_r + scale_r * U_r``; the location
    scales are ``k * e**k`` and the log-scale coordinate uses ``k``.
    """
    if model is not None:
        _check_construction(seq, model)
    h = seq.h
    s, o = seq.scales, seq.offsets
    p = len(s)
    log_jac = float(np.sum(np.log(s)))

    def u_of(t):
        return (np.asarray(t, dtype=float) - o) / s

    def log_pi(t):
        return np.sum(h.g(u_of(t)), axis=-1) - log_jac

    def grad(t):
        return h.g1(u_of(t)) / s

    def hess(t):
        d = h.g2(u_of(t)) / s**2
        return d[..., None] * np.eye(p)

    return PriorSpec(
        name=f"tau-k:{seq.construction},{seq.k:g},{h.a:g},{h.b:g}", p=p, log_pi=log_pi, grad=grad, hess=hess,
        bounds=seq.support, proper=True, normalizer=0.0, compact=True,
        family="tau-k", params={"sequence": seq},
    )


# ---------------------------------------------------------------------------
# mini-language
# ---------------------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _numbers(text, count, spec):
    parts = [x.strip() for x in text.split(",")] if text else []
    if len(parts) != count or not all(re.fullmatch(_NUM, x) for x in parts):
        raise ConfigurationError(f"prior {spec!r}: expected {count} numeric argument(s)")
    return [float(x) for x in parts]


def parse_prior(spec: str, model: ModelFamily) -> PriorSpec:
    """Build a prior from the CLI mini-language.

    ``jeffreys``, ``flat``, ``beta:a,b``, ``power-sigma:a``, ``mvn-power:a``,
    ``exp-tilt:c``, ``normal:mean,var`` and
    ``tau-k:<construction>,<k>,<a>,<b>``.
    """
    head, _, rest = spec.strip().partition(":")
    if head == "jeffreys" and not rest:
        return jeffreys(model)
    if head == "flat" and not rest:
        return flat(model.p, model.bounds)
    if head == "beta":
        if model.name != "bernoulli":
            raise ConfigurationError("beta priors apply to the bernoulli model")
        return beta_prior(*_numbers(rest, 2, spec))
    if head == "power-sigma":
        return power_sigma(*_numbers(rest, 1, spec), model)
    if head == "mvn-power":
        return mvn_power(*_numbers(rest, 1, spec), model)
    if head == "exp-tilt":
        if model.p != 1:
            raise ConfigurationError("exp-tilt priors are one-dimensional")
        return exp_tilt(*_numbers(rest, 1, spec))
    if head == "normal":
        if model.name != "normal-mean":
            raise ConfigurationError("normal priors apply to the normal-mean model")
        return normal_prior(*_numbers(rest, 2, spec))
    if head == "tau-k":
        parts = [x.strip() for x in rest.split(",")]
        if len(parts) != 4:
            raise ConfigurationError(f"prior {spec!r}: expected tau-k:<construction>,<k>,<a>,<b>")
        k, a, b = _numbers(",".join(parts[1:]), 3, spec)
        q = model.p - 1 if parts[0] == "regression-logscale" else 1
        return tau_k(CompactPriorSequence(parts[0], HClassDensity(a, b), k, q), model)
    raise ConfigurationError(f"unrecognised prior {spec!r}")
