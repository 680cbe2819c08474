"""Asymptotic predictive loss functionals.

``A(theta, pi) = i^{rs} rho_r rho_s + 2 D_s(i^{rs} rho_r)`` with
``rho = log pi``; the predictive loss is ``A(theta, pi) - A(theta, pi^J)``.
For compact priors ``tau`` the regret ``d(tau, pi)`` and the predictive
information ``zeta(tau)`` are quadratic forms in score differences integrated
against ``tau``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalFailureError, UnsupportedDimensionError
from .models import (
    ModelFamily,
    ReparamMap,
    alpha_tensors,
    boundary_distance,
    check_theta,
    fisher_info,
    reparameterize,
)
from .numerics import GRAD_STEP, adaptive_integrate
from .priors import PriorSpec, jeffreys, rho_derivatives, transform_prior

NESTED_STEP = 1e-3
QUAD_REL_TOL = 1e-10
QUAD_START = 8


@dataclass(frozen=True)
class LossSurface:
    model: str
    prior: str
    grid: np.ndarray
    values: np.ndarray
    mean: float
    maxdev: float


def _points(model, theta):
    t = check_theta(model, theta)
    return t[None] if t.ndim == 1 else t


def _inv_fisher(model, t):
    return np.linalg.inv(fisher_info(model, t))


def _div_steps(model, prior, t, base):
    dist = boundary_distance(model, t)
    for i, (lo, hi) in enumerate(prior.bounds_or_default()):
        dist[..., i] = np.minimum(dist[..., i], np.minimum(t[..., i] - lo, hi - t[..., i]))
    return np.minimum(base * np.maximum(1.0, np.abs(t)), 0.01 * dist)


def _partial_full(fun, t, s, h):
    """Richardson-refined central difference of ``fun`` along coordinate ``s``."""
    e = np.zeros(t.shape[-1])
    e[s] = 1.0
    hh = h[..., None]

    def diff(k):
        step = (k * hh) * e
        return (fun(t + step) - fun(t - step)) / (2.0 * k * hh)

    return (4.0 * diff(0.5) - diff(1.0)) / 3.0


def _partial(fun, t, s, h):
    return _partial_full(fun, t, s, h)[..., s]


def _quadratic_part(inv, grad):
    return np.einsum("...r,...rs,...s->...", grad, inv, grad)


def a_functional(model: ModelFamily, prior: PriorSpec, theta, method: str = "product"):
    """``A(theta, pi)`` at one point ``(p,)`` or a batch ``(..., p)``.

    ``method="product"`` differentiates the assembled field ``i^{rs} rho_r``;
    ``method="expanded"`` uses ``D_s(i^{rs}) rho_r + i^{rs} rho_{rs}``.
    """
    single = np.ndim(theta) <= 1
    t = _points(model, theta)
    _, grad, hess = rho_derivatives(prior, t)
    inv = _inv_fisher(model, t)
    out = _quadratic_part(inv, grad)
    closed = prior.grad is not None
    base = GRAD_STEP if closed else NESTED_STEP
    h = _div_steps(model, prior, t, base)
    p = model.p
    if method == "product":

        def field(z):
            g = prior.grad(z) if closed else rho_derivatives(prior, z)[1]
            return np.einsum("...rs,...r->...s", _inv_fisher(model, z), g)

        div = sum(_partial(field, t, s, h[..., s]) for s in range(p))
    elif method == "expanded":
        div = np.einsum("...rs,...rs->...", inv, hess)
        for s in range(p):
            col = _partial_full(lambda z, s=s: _inv_fisher(model, z)[..., :, s], t, s, h[..., s])
            div = div + np.einsum("...r,...r->...", col, grad)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = out + 2.0 * div
    return float(out[0]) if single else out


def predictive_loss(model: ModelFamily, prior: PriorSpec, theta, method: str = "product"):
    """Asymptotic predictive loss ``L(theta, pi) = A(theta, pi) - A(theta, pi^J)``."""
    return a_functional(model, prior, theta, method) - a_functional(model, jeffreys(model), theta, method)


def loss_surface(model: ModelFamily, prior: PriorSpec, grid=None) -> LossSurface:
    grid = np.asarray(model.default_grid if grid is None else grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    values = np.atleast_1d(predictive_loss(model, prior, grid))
    mean = float(values.mean())
    return LossSurface(model.name, prior.name, grid, values, mean, float(np.max(np.abs(values - mean))))


def mbar_scalar(model: ModelFamily, theta) -> float:
    """Invariant ``M-bar = alpha_111**2 / 12 + curvature / 2`` (one parameter only)."""
    if model.p != 1:
        raise UnsupportedDimensionError(f"{model.name}: M-bar is only available for p = 1")
    al = alpha_tensors(model, theta)
    return al.alpha111**2 / 12.0 + 0.5 * al.curvature


def _check_compact(model, tau):
    if not (tau.compact and tau.proper and tau.normalizer is not None):
        raise DomainError(f"{tau.name}: expected a proper compact prior with known normalizer")
    for (lo, hi), (mlo, mhi) in zip(tau.bounds, model.bounds):
        if lo <= mlo or hi >= mhi:
            raise DomainError(f"{tau.name}: support [{lo}, {hi}] touches the boundary of ({mlo}, {mhi})")


def asymptotic_regret(model: ModelFamily, tau: PriorSpec, prior: PriorSpec,
                      rel_tol: float = QUAD_REL_TOL, max_nodes: int = 2**14) -> float:
    """``d(tau, pi) = int i^{rs} (rho_r - mu_r)(rho_s - mu_s) tau dtheta``.

    ``rho = log pi`` and ``mu = log tau``; computed by adaptive tensor-product
    Gauss-Legendre quadrature over the support box of ``tau``.
    """
    _check_compact(model, tau)

    def integrand(nodes):
        nodes = nodes[:, None] if nodes.ndim == 1 else nodes
        dens = np.exp(tau.log_pi(nodes) - tau.normalizer)
        diff = rho_derivatives(prior, nodes)[1] - rho_derivatives(tau, nodes)[1]
        return _quadratic_part(_inv_fisher(model, nodes), diff) * dens

    box = tau.bounds[0] if model.p == 1 else tau.bounds
    value = adaptive_integrate(integrand, box, rel_tol=rel_tol, start=QUAD_START, max_nodes=max_nodes)
    if value < -1e-10:
        raise NumericalFailureError(f"negative regret {value:.3e} for {tau.name} vs {prior.name}")
    return value


def predictive_information(model: ModelFamily, tau: PriorSpec, **kw) -> float:
    """``zeta(tau)``: the regret of ``tau`` against Jeffreys' prior."""
    return asymptotic_regret(model, tau, jeffreys(model), **kw)


def expected_loss(model: ModelFamily, prior: PriorSpec, tau: PriorSpec,
                  rel_tol: float = 1e-9, max_nodes: int = 2**14) -> float:
    """``int L(theta, pi) tau(theta) dtheta`` for compact ``tau``."""
    _check_compact(model, tau)

    def integrand(nodes):
        nodes = nodes[:, None] if nodes.ndim == 1 else nodes
        dens = np.exp(tau.log_pi(nodes) - tau.normalizer)
        return np.atleast_1d(predictive_loss(model, prior, nodes)) * dens

    box = tau.bounds[0] if model.p == 1 else tau.bounds
    return adaptive_integrate(integrand, box, rel_tol=rel_tol, abs_tol=1e-12, start=QUAD_START, max_nodes=max_nodes)


def invariance_check(model: ModelFamily, prior: PriorSpec, rmap: ReparamMap, grid) -> float:
    """Largest ``|L|`` discrepancy between original and transformed coordinates.

    ``grid`` holds points in the original coordinates; the prior is carried
    over with its Jacobian factor.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    other = reparameterize(model, rmap)
    moved = transform_prior(prior, rmap)
    here = np.atleast_1d(predictive_loss(model, prior, grid))
    there = np.atleast_1d(predictive_loss(other, moved, rmap.from_base(grid)))
    return float(np.max(np.abs(here - there)))
