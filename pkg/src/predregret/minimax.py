"""Equalizer scans, compact-sequence minimax checks and the finite-sample
boundedness diagnostic."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .asymptotics import asymptotic_regret, loss_surface, predictive_information
from .errors import ConfigurationError, DomainError
from .exact import c_n, m_schedule, predictive_loss_finite
from .models import ModelFamily
from .priors import (
    CompactPriorSequence,
    HClassDensity,
    PriorSpec,
    beta_prior,
    h_class_alpha,
    jeffreys,
    mvn_power,
    power_sigma,
    tau_k,
)

DEFAULT_K = (2, 4, 8, 16, 32)
UNCERTIFIABLE = {
    "mvn2": "no decaying compact prior sequence is available for this model; "
            "minimaxity of the affine right-Haar prior is an open conjecture",
}
CONSTRUCTION_FOR = {
    "normal-mean": "line-scale",
    "normal-ls": "location-logscale",
    "linreg": "regression-logscale",
}


@dataclass(frozen=True)
class EqualizerReport:
    model: str
    family: str
    a_values: list
    constants: list
    maxdevs: list
    equalizer: list
    argmin_a: Optional[float]
    min_constant: Optional[float]

    def rows(self):
        return list(zip(self.a_values, self.constants, self.maxdevs, self.equalizer))


@dataclass
class MinimaxCertificate:
    model: str
    prior: str
    construction: str
    c: float
    alpha: float
    k_values: list = field(default_factory=list)
    d_values: list = field(default_factory=list)
    zeta_values: list = field(default_factory=list)
    bound_values: list = field(default_factory=list)
    status: str = "failed"
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class UClassReport:
    model: str
    prior: str
    n_values: list
    m_values: list
    sup_values: list
    argsup: list
    slope: float
    slope_se: float
    classification: str


def family_factory(model: ModelFamily, family: str) -> Callable[[float], PriorSpec]:
    """Map a family name to ``a -> prior``."""
    if family == "power-sigma":
        return lambda a: power_sigma(a, model)
    if family == "mvn-power":
        return lambda a: mvn_power(a, model)
    if family == "beta-sym":
        return lambda a: beta_prior(a, a)
    raise ConfigurationError(f"unknown prior family {family!r}")


def equalizer_tolerance(mean: float) -> float:
    return 1e-6 * max(1.0, abs(mean))


def equalizer_scan(model: ModelFamily, family: str, a_grid: Sequence[float], theta_grid=None) -> EqualizerReport:
    """Constant loss and its spread over ``theta_grid`` for each ``a``."""
    make = family_factory(model, family)
    consts, devs, flags = [], [], []
    for a in a_grid:
        surf = loss_surface(model, make(float(a)), theta_grid)
        consts.append(surf.mean)
        devs.append(surf.maxdev)
        flags.append(bool(surf.maxdev < equalizer_tolerance(surf.mean)))
    eq = [i for i, f in enumerate(flags) if f]
    best = min(eq, key=lambda i: consts[i]) if eq else None
    return EqualizerReport(
        model.name, family, [float(a) for a in a_grid], consts, devs, flags,
        None if best is None else float(a_grid[best]),
        None if best is None else consts[best],
    )


def default_minimax_prior(model: ModelFamily) -> PriorSpec:
    if model.name == "normal-mean":
        return jeffreys(model)
    if model.name in ("normal-ls", "normal-ms", "linreg"):
        return power_sigma(1.0, model)
    if model.name == "mvn2":
        return mvn_power(1.0, model)
    raise ConfigurationError(f"no default minimax candidate for {model.name}")


def _analytic_bound(model, construction, alpha, k):
    if construction == "line-scale":
        return alpha / k**2
    if construction == "location-logscale":
        return 1.5 * alpha / k**2
    if construction == "regression-logscale":
        v = np.asarray(model.meta["V"])
        return alpha * (float(np.trace(np.linalg.inv(v))) + 0.5) / k**2
    return None


def _sequence(model, construction, h, k):
    q = int(model.meta.get("q", 1)) if construction == "regression-logscale" else 1
    return tau_k(CompactPriorSequence(construction, h, float(k), q), model)


def _constant(model, prior):
    surf = loss_surface(model, prior)
    if surf.maxdev >= equalizer_tolerance(surf.mean):
        raise DomainError(f"{prior.name} is not an equalizer for {model.name} (maxdev {surf.maxdev:.3e})")
    return surf.mean


def minimax_verify(model: ModelFamily, prior: Optional[PriorSpec] = None, construction: Optional[str] = None,
                   k_values: Sequence[float] = DEFAULT_K, h: Optional[HClassDensity] = None) -> MinimaxCertificate:
    """Regret of ``prior`` against the compact sequence ``tau_k``.

    The status is ``verified`` when every ``d(tau_k, pi)`` is non-negative,
    strictly decreasing in ``k``, ``k**2 d`` stays bounded, any analytic bound
    holds, and ``zeta(tau_k) - d(tau_k, pi) = -c``.
    """
    prior = default_minimax_prior(model) if prior is None else prior
    h = HClassDensity() if h is None else h
    alpha = h_class_alpha(h)
    if model.name in UNCERTIFIABLE:
        c = _constant(model, prior)
        return MinimaxCertificate(model.name, prior.name, construction or "none", c, alpha,
                                  status="refused", message=UNCERTIFIABLE[model.name])
    construction = construction or CONSTRUCTION_FOR.get(model.name)
    if construction is None:
        raise ConfigurationError(f"no compact-sequence construction registered for {model.name}")
    c = _constant(model, prior)
    cert = MinimaxCertificate(model.name, prior.name, construction, c, alpha)
    for k in k_values:
        tau = _sequence(model, construction, h, k)
        cert.k_values.append(float(k))
        cert.d_values.append(asymptotic_regret(model, tau, prior))
        cert.zeta_values.append(predictive_information(model, tau))
        cert.bound_values.append(_analytic_bound(model, construction, alpha, k))
    d = np.array(cert.d_values)
    k = np.array(cert.k_values)
    problems = []
    if np.any(d < -1e-10):
        problems.append("negative regret")
    if np.any(np.diff(d) >= 0):
        problems.append("regret not strictly decreasing in k")
    scaled = d * k**2
    if scaled[-1] > 2.0 * scaled.max(initial=0.0) or not np.all(np.isfinite(scaled)):
        problems.append("k^2 d(tau_k) is not bounded")
    for bound, val in zip(cert.bound_values, cert.d_values):
        if bound is not None and val > bound * (1 + 1e-10):
            problems.append(f"regret {val:.6g} above the analytic bound {bound:.6g}")
            break
    gap = np.abs(np.array(cert.zeta_values) - d + c)
    if np.any(gap > 1e-8 * np.maximum(1.0, np.abs(cert.zeta_values))):
        problems.append(f"information identity off by {gap.max():.3e}")
    cert.status = "failed" if problems else "verified"
    cert.message = "; ".join(problems) if problems else "d(tau_k, pi) decreases to 0 at rate 1/k^2"
    return cert


def information_limit_check(model: ModelFamily, prior: Optional[PriorSpec] = None,
                            construction: Optional[str] = None, k_values: Sequence[float] = DEFAULT_K,
                            h: Optional[HClassDensity] = None):
    """``(k, zeta(tau_k), |zeta(tau_k) + c|)`` along the sequence."""
    prior = default_minimax_prior(model) if prior is None else prior
    h = HClassDensity() if h is None else h
    construction = construction or CONSTRUCTION_FOR.get(model.name)
    if construction is None or model.name in UNCERTIFIABLE:
        raise ConfigurationError(f"no compact-sequence construction available for {model.name}")
    c = _constant(model, prior)
    out = []
    for k in k_values:
        z = predictive_information(model, _sequence(model, construction, h, k))
        out.append((float(k), z, abs(z + c)))
    return out


def default_uclass_grid(model: ModelFamily):
    if model.name == "bernoulli":
        return np.array([0.0, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 1.0])
    return np.asarray(model.default_grid)


def u_class_diagnostic(model: ModelFamily, prior: PriorSpec, theta_grid=None,
                       n_values: Sequence[int] = (50, 100, 200, 400, 800), m_rule: str = "1") -> UClassReport:
    """Growth of ``c_n sup_theta L_{Y|X}(theta, pi)`` with ``n``.

    A straight line is fitted to the sup over the three largest ``n``; the
    prior is flagged ``diverging`` when the slope exceeds ten standard errors
    and the fitted rise over that range exceeds ``max(1, 10% of the level)``.
    The second condition keeps slowly settling curves, which have tiny
    residuals, from being flagged.
    """
    grid = default_uclass_grid(model) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    sched = m_schedule(n_values, m_rule)
    sups, where = [], []
    for n, m in sched:
        vals = [c_n(n, m) * predictive_loss_finite(model, prior, th, n, m) for th in grid]
        i = int(np.argmax(vals))
        sups.append(float(vals[i]))
        where.append(grid[i].tolist())
    slope, se = _tail_slope([n for n, _ in sched], sups)
    xs = [n for n, _ in sched][-3:]
    rise = slope * (xs[-1] - xs[0])
    level = max(1.0, 0.1 * abs(sups[-1]))
    diverging = slope > 10.0 * se and rise > level
    return UClassReport(model.name, prior.name, [n for n, _ in sched], [m for _, m in sched], sups, where,
                        slope, se, "diverging" if diverging else "bounded")


def _tail_slope(ns, values):
    x = np.asarray(ns[-3:], dtype=float)
    y = np.asarray(values[-3:], dtype=float)
    if x.size < 3:
        raise ConfigurationError("u-class diagnostic needs at least three sample sizes")
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = x.size - 2
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(coef[1]), float(math.sqrt(max(cov[1, 1], 0.0)))
