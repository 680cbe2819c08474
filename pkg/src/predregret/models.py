"""Registry of parametric sampling models.

Each :class:`ModelFamily` bundles a per-observation log density, a seeded
sampler, an expectation operator (exact summation for discrete supports,
re-centred Gauss-Hermite quadrature for continuous ones) and, where known,
closed-form Fisher information and Jeffreys log-density derivatives.

Registered names: ``bernoulli``, ``normal-mean``, ``normal-ms`` (mean and
standard deviation), ``normal-ls`` (mean and log standard deviation),
``linreg`` (fixed design, coefficients and log standard deviation) and
``mvn2`` (bivariate normal in Cholesky-type coordinates
``(psi1, psi2, beta21, mu1, mu2)``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import xlog1py, xlogy

from .errors import (
    ConfigurationError,
    DomainError,
    NumericalDegeneracyError,
    UnsupportedDimensionError,
)
from .numerics import HESS_STEP, central_diff, gauss_hermite

BOUNDARY_TOL = 1e-12
HERMITE_NODES = 64
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ParameterPoint:
    coords: tuple

    @property
    def p(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or float)


@dataclass(frozen=True)
class JeffreysForm:
    """Closed-form ``1/2 log|i(theta)|`` with its gradient and Hessian."""

    log_pi: Callable
    grad: Callable
    hess: Callable
    proper: bool = False
    normalizer: Optional[float] = None


@dataclass(frozen=True)
class AlphaTensors:
    alpha111: float
    alpha12: float
    alpha22: float

    @property
    def curvature(self) -> float:
        """Efron's curvature ``alpha22 - alpha12**2 - 1``."""
        return self.alpha22 - self.alpha12**2 - 1.0


@dataclass(frozen=True)
class ModelFamily:
    name: str
    p: int
    support: str  # "binary" | "real" | "real-vector" | "design"
    param_names: tuple
    bounds: tuple
    log_f: Callable  # (x, theta) -> log f(x|theta), vectorised over x
    sampler: Callable  # (theta, count, rng) -> observations
    nodes: Callable  # theta -> (xs, ws) with E g(X) = sum(ws * g(xs))
    fisher_closed: Optional[Callable] = None
    jeffreys_closed: Optional[JeffreysForm] = None
    score_derivs: Optional[Callable] = None  # p == 1: (x, t) -> (l', l'')
    conjugacy: Optional[str] = None
    param_shape: str = "generic"
    scale_index: Optional[int] = None
    scale_form: Optional[str] = None  # "sigma" | "log"
    default_grid: Optional[np.ndarray] = None
    design: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def expect(self, theta, g: Callable) -> float:
        xs, ws = self.nodes(np.asarray(theta, dtype=float))
        return float(np.dot(ws, np.asarray(g(xs), dtype=float)))

    def sample(self, theta, count: int, seed=None):
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return self.sampler(check_theta(self, theta), int(count), rng)


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def check_theta(model: ModelFamily, theta) -> np.ndarray:
    """Return ``theta`` as a float array after an open-set membership check."""
    t = np.asarray(theta, dtype=float)
    if t.ndim == 0:
        t = t[None]
    if t.shape[-1] != model.p:
        raise DomainError(f"{model.name}: expected {model.p} coordinates, got {t.shape[-1]}")
    if not np.all(np.isfinite(t)):
        raise DomainError(f"{model.name}: non-finite parameter {t}")
    for i, (lo, hi) in enumerate(model.bounds):
        c = t[..., i]
        if np.any(c <= lo + BOUNDARY_TOL) or np.any(c >= hi - BOUNDARY_TOL):
            raise DomainError(
                f"{model.name}: {model.param_names[i]}={c} is on or outside the boundary of ({lo}, {hi})"
            )
    return t


def boundary_distance(model: ModelFamily, theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    lo = np.array([b[0] for b in model.bounds])
    hi = np.array([b[1] for b in model.bounds])
    return np.minimum(t - lo, hi - t)


def log_density(model: ModelFamily, x, theta) -> np.ndarray:
    """``log f(x|theta)``; rejects out-of-support ``x`` and boundary ``theta``."""
    t = check_theta(model, theta)
    x = np.asarray(x, dtype=float)
    if model.support == "binary" and not np.all((x == 0) | (x == 1)):
        raise DomainError(f"{model.name}: observation outside {{0, 1}}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{model.name}: non-finite observation")
    if model.support == "design":
        rows = x[..., 0]
        if np.any(rows != np.round(rows)) or np.any(rows < 0) or np.any(rows >= len(model.design)):
            raise DomainError(f"{model.name}: row index outside the design")
    out = model.log_f(x, t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Fisher information and alpha tensors
# ---------------------------------------------------------------------------

def _spd_or_raise(mat, name):
    sym = 0.5 * (mat + np.swapaxes(mat, -1, -2))
    if np.max(np.abs(sym - mat), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(mat))):
        raise NumericalDegeneracyError(f"{name}: Fisher information is not symmetric")
    if np.any(np.linalg.eigvalsh(sym) <= 0):
        raise NumericalDegeneracyError(f"{name}: Fisher information is not positive definite")
    return sym


def fisher_numeric(model: ModelFamily, theta) -> np.ndarray:
    """Expected negative Hessian of ``log f`` by exact sum or quadrature.

    The expectation measure is frozen at ``theta``; the Hessian of
    ``z -> E_theta log f(X|z)`` at ``z = theta`` is then the expected Hessian.
    """
    t = check_theta(model, theta)
    xs, ws = model.nodes(t)
    step = HESS_STEP * np.maximum(1.0, np.abs(t))
    step = np.minimum(step, 0.01 * boundary_distance(model, t))

    def expected_loglik(z):
        z = np.asarray(z, dtype=float)
        flat = z.reshape(-1, model.p)
        vals = np.array([np.dot(ws, model.log_f(xs, row)) for row in flat])
        return vals.reshape(z.shape[:-1])

    return _spd_or_raise(-central_diff(expected_loglik, t, order=2, step=step), model.name)


def fisher_info(model: ModelFamily, theta, method: str = "auto") -> np.ndarray:
    """Per-observation Fisher information ``i(theta)`` as a ``(p, p)`` array.

    ``method`` is ``"closed"``, ``"numeric"`` or ``"auto"`` (closed form when
    registered). Batched ``theta`` of shape ``(..., p)`` is accepted by the
    closed form.
    """
    t = check_theta(model, theta)
    if method == "numeric" or (method == "auto" and model.fisher_closed is None):
        if t.ndim > 1:
            return np.stack([fisher_numeric(model, row) for row in t.reshape(-1, model.p)]).reshape(
                t.shape + (model.p,)
            )
        return fisher_numeric(model, t)
    if model.fisher_closed is None:
        raise ConfigurationError(f"{model.name}: no closed-form Fisher information registered")
    return np.asarray(model.fisher_closed(t), dtype=float)


def _score_derivs_fd(model, xs, t):
    h = 1e-3 * max(1.0, abs(t)) if np.isinf(boundary_distance(model, [t])[0]) else min(
        1e-3 * max(1.0, abs(t)), 0.05 * boundary_distance(model, [t])[0]
    )

    def lf(u):
        return model.log_f(xs, np.array([u]))

    def d1(h):
        return (lf(t + h) - lf(t - h)) / (2 * h)

    def d2(h):
        return (lf(t + h) - 2 * lf(t) + lf(t - h)) / h**2

    return (4 * d1(h / 2) - d1(h)) / 3, (4 * d2(h / 2) - d2(h)) / 3


def alpha_tensors(model: ModelFamily, theta) -> AlphaTensors:
    """Standardised score moments ``alpha_111``, ``alpha_12``, ``alpha_22``.

    Only defined for one-parameter models.
    """
    if model.p != 1:
        raise UnsupportedDimensionError(f"{model.name}: alpha tensors need p = 1, got p = {model.p}")
    t = check_theta(model, theta)
    xs, ws = model.nodes(t)
    if model.score_derivs is not None:
        l1, l2 = model.score_derivs(xs, t[0])
    else:
        l1, l2 = _score_derivs_fd(model, xs, t[0])
    info = float(fisher_info(model, t)[0, 0])
    return AlphaTensors(
        alpha111=float(np.dot(ws, l1**3)) / info**1.5,
        alpha12=float(np.dot(ws, l1 * l2)) / info**1.5,
        alpha22=float(np.dot(ws, l2**2)) / info**2,
    )


# ---------------------------------------------------------------------------
# reparameterisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReparamMap:
    """Smooth bijection from new coordinates ``eta`` onto the base ``theta``.

    ``jacobian(eta)`` returns ``d theta / d eta`` with shape ``(..., p, p)``.
    """

    name: str
    to_base: Callable
    from_base: Callable
    jacobian: Callable
    bounds: tuple
    param_names: tuple
    param_shape: str = "generic"


def _jacobian_checked(rmap: ReparamMap, eta):
    jac = np.asarray(rmap.jacobian(eta), dtype=float)
    if np.any(np.abs(np.linalg.det(jac)) < 1e-300) or not np.all(np.isfinite(jac)):
        raise DomainError(f"{rmap.name}: singular Jacobian at {eta}")
    return jac


def reparameterize(model: ModelFamily, rmap: ReparamMap) -> ModelFamily:
    """Model in the coordinates of ``rmap``; Fisher info is ``J' i J``."""

    def log_f(x, eta):
        return model.log_f(x, rmap.to_base(eta))

    def sampler(eta, count, rng):
        return model.sampler(rmap.to_base(eta), count, rng)

    def nodes(eta):
        return model.nodes(rmap.to_base(eta))

    def sandwich(eta):
        jac = _jacobian_checked(rmap, eta)
        base = model.fisher_closed(rmap.to_base(eta))
        return np.swapaxes(jac, -1, -2) @ base @ jac

    fisher_closed = sandwich if model.fisher_closed is not None else None

    new = ModelFamily(
        name=f"{model.name}[{rmap.name}]",
        p=model.p,
        support=model.support,
        param_names=rmap.param_names,
        bounds=rmap.bounds,
        log_f=log_f,
        sampler=sampler,
        nodes=nodes,
        fisher_closed=fisher_closed,
        conjugacy=model.conjugacy,
        param_shape=rmap.param_shape,
        design=model.design,
        meta={**model.meta, "base": model, "reparam": rmap},
    )
    if model.default_grid is not None:
        new = replace(new, default_grid=np.asarray(rmap.from_base(model.default_grid)))
    return new


def identity_map(model: ModelFamily) -> ReparamMap:
    return ReparamMap(
        name="identity",
        to_base=lambda e: np.asarray(e, dtype=float),
        from_base=lambda t: np.asarray(t, dtype=float),
        jacobian=lambda e: np.broadcast_to(np.eye(model.p), np.shape(e) + (model.p,)).copy(),
        bounds=model.bounds,
        param_names=model.param_names,
        param_shape=model.param_shape,
    )


def log_scale_map() -> ReparamMap:
    """``(beta, lambda) -> (beta, sigma = exp(lambda))`` for ``normal-ms``."""

    def to_base(e):
        e = np.asarray(e, dtype=float)
        return np.stack([e[..., 0], np.exp(e[..., 1])], axis=-1)

    def from_base(t):
        t = np.asarray(t, dtype=float)
        return np.stack([t[..., 0], np.log(t[..., 1])], axis=-1)

    def jacobian(e):
        e = np.asarray(e, dtype=float)
        jac = np.zeros(e.shape + (2,))
        jac[..., 0, 0] = 1.0
        jac[..., 1, 1] = np.exp(e[..., 1])
        return jac

    return ReparamMap("log-scale", to_base, from_base, jacobian,
                      ((-np.inf, np.inf), (-np.inf, np.inf)), ("beta", "lambda"), "location-logscale")


def arcsine_map() -> ReparamMap:
    """``eta -> theta = sin(eta)**2`` on ``(0, pi/2)`` for ``bernoulli``."""

    def to_base(e):
        return np.sin(np.asarray(e, dtype=float)) ** 2

    def from_base(t):
        return np.arcsin(np.sqrt(np.asarray(t, dtype=float)))

    def jacobian(e):
        return np.sin(2.0 * np.asarray(e, dtype=float))[..., None]

    return ReparamMap("arcsine", to_base, from_base, jacobian, ((0.0, np.pi / 2),), ("eta",), "bounded-interval")


# ---------------------------------------------------------------------------
# registered families
# ---------------------------------------------------------------------------

def _zeros_like_point(t):
    return np.zeros(np.shape(t)[:-1])


def bernoulli() -> ModelFamily:
    def log_f(x, t):
        th = t[..., 0]
        return xlogy(x, th) + xlog1py(1.0 - x, -th)

    def nodes(t):
        th = float(t[0])
        return np.array([0.0, 1.0]), np.array([1.0 - th, th])

    def sampler(t, count, rng):
        return (rng.random(count) < t[0]).astype(float)

    def fisher(t):
        th = t[..., 0]
        return (1.0 / (th * (1.0 - th)))[..., None, None]

    def score(x, th):
        return x / th - (1 - x) / (1 - th), -x / th**2 - (1 - x) / (1 - th) ** 2

    jeff = JeffreysForm(
        log_pi=lambda t: -0.5 * np.log(t[..., 0]) - 0.5 * np.log1p(-t[..., 0]),
        grad=lambda t: (-0.5 / t[..., 0] + 0.5 / (1.0 - t[..., 0]))[..., None],
        hess=lambda t: (0.5 / t[..., 0] ** 2 + 0.5 / (1.0 - t[..., 0]) ** 2)[..., None, None],
        proper=True,
        normalizer=float(np.log(np.pi)),
    )
    return ModelFamily(
        name="bernoulli", p=1, support="binary", param_names=("theta",), bounds=((0.0, 1.0),),
        log_f=log_f, sampler=sampler, nodes=nodes, fisher_closed=fisher, jeffreys_closed=jeff,
        score_derivs=score, conjugacy="beta", param_shape="unit-interval",
        default_grid=np.linspace(0.05, 0.95, 19)[:, None],
    )


def normal_mean() -> ModelFamily:
    def log_f(x, t):
        return -0.5 * LOG_2PI - 0.5 * (x - t[..., 0]) ** 2

    def nodes(t):
        rule = gauss_hermite(HERMITE_NODES, float(t[0]), 1.0)
        return rule.nodes, rule.weights

    def sampler(t, count, rng):
        return t[0] + rng.standard_normal(count)

    jeff = JeffreysForm(
        log_pi=_zeros_like_point,
        grad=lambda t: np.zeros(np.shape(t)),
        hess=lambda t: np.zeros(np.shape(t) + (1,)),
    )
    return ModelFamily(
        name="normal-mean", p=1, support="real", param_names=("theta",), bounds=((-np.inf, np.inf),),
        log_f=log_f, sampler=sampler, nodes=nodes,
        fisher_closed=lambda t: np.ones(np.shape(t)[:-1] + (1, 1)),
        jeffreys_closed=jeff,
        score_derivs=lambda x, th: (x - th, -np.ones_like(x)),
        conjugacy="normal", param_shape="line",
        default_grid=np.linspace(-3.0, 3.0, 13)[:, None],
    )


def _grid2(a, b):
    g = np.array(np.meshgrid(a, b, indexing="ij"))
    return g.reshape(2, -1).T


def normal_ms() -> ModelFamily:
    def log_f(x, t):
        b, s = t[..., 0], t[..., 1]
        return -0.5 * LOG_2PI - np.log(s) - 0.5 * ((x - b) / s) ** 2

    def nodes(t):
        rule = gauss_hermite(HERMITE_NODES, float(t[0]), float(t[1]))
        return rule.nodes, rule.weights

    def sampler(t, count, rng):
        return t[0] + t[1] * rng.standard_normal(count)

    def fisher(t):
        s2 = t[..., 1] ** 2
        out = np.zeros(np.shape(t) + (2,))
        out[..., 0, 0] = 1.0 / s2
        out[..., 1, 1] = 2.0 / s2
        return out

    def jgrad(t):
        out = np.zeros(np.shape(t))
        out[..., 1] = -2.0 / t[..., 1]
        return out

    def jhess(t):
        out = np.zeros(np.shape(t) + (2,))
        out[..., 1, 1] = 2.0 / t[..., 1] ** 2
        return out

    jeff = JeffreysForm(log_pi=lambda t: 0.5 * np.log(2.0) - 2.0 * np.log(t[..., 1]), grad=jgrad, hess=jhess)
    return ModelFamily(
        name="normal-ms", p=2, support="real", param_names=("beta", "sigma"),
        bounds=((-np.inf, np.inf), (0.0, np.inf)),
        log_f=log_f, sampler=sampler, nodes=nodes, fisher_closed=fisher, jeffreys_closed=jeff,
        conjugacy="normal-gamma", param_shape="location-scale", scale_index=1, scale_form="sigma",
        default_grid=_grid2([-2.0, 0.0, 2.0], [0.5, 1.0, 2.0]),
    )


def normal_ls() -> ModelFamily:
    def log_f(x, t):
        b, lam = t[..., 0], t[..., 1]
        return -0.5 * LOG_2PI - lam - 0.5 * (x - b) ** 2 * np.exp(-2.0 * lam)

    def nodes(t):
        rule = gauss_hermite(HERMITE_NODES, float(t[0]), float(np.exp(t[1])))
        return rule.nodes, rule.weights

    def sampler(t, count, rng):
        return t[0] + np.exp(t[1]) * rng.standard_normal(count)

    def fisher(t):
        out = np.zeros(np.shape(t) + (2,))
        out[..., 0, 0] = np.exp(-2.0 * t[..., 1])
        out[..., 1, 1] = 2.0
        return out

    def jgrad(t):
        out = np.zeros(np.shape(t))
        out[..., 1] = -1.0
        return out

    jeff = JeffreysForm(
        log_pi=lambda t: 0.5 * np.log(2.0) - t[..., 1],
        grad=jgrad,
        hess=lambda t: np.zeros(np.shape(t) + (2,)),
    )
    return ModelFamily(
        name="normal-ls", p=2, support="real", param_names=("beta", "lambda"),
        bounds=((-np.inf, np.inf), (-np.inf, np.inf)),
        log_f=log_f, sampler=sampler, nodes=nodes, fisher_closed=fisher, jeffreys_closed=jeff,
        conjugacy="normal-gamma", param_shape="location-logscale", scale_index=1, scale_form="log",
        default_grid=_grid2([-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]),
    )


def default_design(rows: int = 20) -> np.ndarray:
    """Intercept plus a centred, evenly spaced covariate."""
    z = np.linspace(-1.0, 1.0, rows)
    return np.column_stack([np.ones(rows), z - z.mean()])


def read_design_csv(path) -> np.ndarray:
    """Design matrix from CSV: rows are observations, columns regressors.

    A non-numeric first row is treated as a header and skipped.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigurationError(f"{path}: empty design file")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        mat = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: non-numeric design entry ({exc})") from None
    return mat


def linreg(design=None) -> ModelFamily:
    """Normal linear regression in ``phi = (beta_1..beta_q, lambda)``.

    An observation is a pair ``(row, response)``; the row is drawn uniformly
    from the design, so the per-observation information is
    ``diag(exp(-2 lambda) V, 2)`` with ``V = Z'Z / n``.
    """
    z = default_design() if design is None else np.atleast_2d(np.asarray(design, dtype=float))
    n, q = z.shape
    if np.linalg.matrix_rank(z) < q:
        raise ConfigurationError("design matrix must have full column rank")
    v = z.T @ z / n
    logdet_v = float(np.linalg.slogdet(v)[1])

    def log_f(x, t):
        x = np.asarray(x, dtype=float)
        rows = x[..., 0].astype(int)
        y = x[..., 1]
        beta, lam = t[..., :q], t[..., q]
        resid = y - z[rows] @ beta
        return -np.log(n) - 0.5 * LOG_2PI - lam - 0.5 * resid**2 * np.exp(-2.0 * lam)

    base_x, base_w = np.polynomial.hermite_e.hermegauss(HERMITE_NODES)
    base_w = base_w / np.sqrt(2.0 * np.pi)

    def nodes(t):
        mean = z @ t[:q]
        sd = np.exp(t[q])
        ys = mean[:, None] + sd * base_x[None, :]
        rows = np.repeat(np.arange(n), HERMITE_NODES)
        xs = np.column_stack([rows, ys.ravel()])
        ws = np.tile(base_w, n) / n
        return xs, ws

    def sampler(t, count, rng):
        rows = rng.integers(0, n, size=count)
        y = z[rows] @ t[:q] + np.exp(t[q]) * rng.standard_normal(count)
        return np.column_stack([rows, y])

    def fisher(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (q + 1,))
        out[..., :q, :q] = np.exp(-2.0 * t[..., q])[..., None, None] * v
        out[..., q, q] = 2.0
        return out

    def jgrad(t):
        out = np.zeros(np.shape(t))
        out[..., q] = -float(q)
        return out

    jeff = JeffreysForm(
        log_pi=lambda t: 0.5 * (np.log(2.0) + logdet_v) - q * t[..., q],
        grad=jgrad,
        hess=lambda t: np.zeros(np.shape(t) + (q + 1,)),
    )
    grid = np.array([[b0, b1, lam][: q + 1] if q == 2 else [b0] * q + [lam]
                     for b0 in (-1.0, 1.0) for b1 in (-0.5, 0.5) for lam in (-1.0, 0.0, 1.0)])
    return ModelFamily(
        name="linreg", p=q + 1, support="design",
        param_names=tuple(f"beta{i + 1}" for i in range(q)) + ("lambda",),
        bounds=tuple([(-np.inf, np.inf)] * (q + 1)),
        log_f=log_f, sampler=sampler, nodes=nodes, fisher_closed=fisher, jeffreys_closed=jeff,
        param_shape="regression-logscale", scale_index=q, scale_form="log",
        default_grid=np.unique(grid, axis=0), design=z, meta={"V": v, "q": q},
    )


def _mvn2_T(t):
    t = np.asarray(t, dtype=float)
    T = np.zeros(t.shape[:-1] + (2, 2))
    T[..., 0, 0] = t[..., 0]
    T[..., 1, 0] = t[..., 1] * t[..., 2]
    T[..., 1, 1] = t[..., 1]
    return T


def mvn2() -> ModelFamily:
    """Bivariate normal with ``Sigma^{-1} = T'T`` and ``T`` lower triangular.

    Coordinates ``(psi1, psi2, beta21, mu1, mu2)`` with ``psi_i = t_ii`` and
    ``beta21 = t21 / t22``.
    """

    def log_f(x, t):
        x = np.asarray(x, dtype=float)
        p1, p2, b21, m1, m2 = (t[..., i] for i in range(5))
        d1 = x[..., 0] - m1
        d2 = x[..., 1] - m2
        return -LOG_2PI + np.log(p1) + np.log(p2) - 0.5 * (p1**2 * d1**2 + p2**2 * (b21 * d1 + d2) ** 2)

    gx, gw = np.polynomial.hermite_e.hermegauss(HERMITE_NODES)
    gw = gw / np.sqrt(2.0 * np.pi)
    zz = np.array(np.meshgrid(gx, gx, indexing="ij")).reshape(2, -1).T
    ww = np.outer(gw, gw).ravel()

    def nodes(t):
        chol = np.linalg.inv(_mvn2_T(t))  # Sigma = chol chol'
        return t[3:5] + zz @ chol.T, ww

    def sampler(t, count, rng):
        chol = np.linalg.inv(_mvn2_T(t))
        return t[3:5] + rng.standard_normal((count, 2)) @ chol.T

    def fisher(t):
        t = np.asarray(t, dtype=float)
        T = _mvn2_T(t)
        out = np.zeros(t.shape + (5,))
        out[..., 0, 0] = 2.0 / t[..., 0] ** 2
        out[..., 1, 1] = 2.0 / t[..., 1] ** 2
        out[..., 2, 2] = t[..., 1] ** 2 / t[..., 0] ** 2
        out[..., 3:5, 3:5] = np.swapaxes(T, -1, -2) @ T
        return out

    def jgrad(t):
        out = np.zeros(np.shape(t))
        out[..., 0] = -1.0 / t[..., 0]
        out[..., 1] = 1.0 / t[..., 1]
        return out

    def jhess(t):
        out = np.zeros(np.shape(t) + (5,))
        out[..., 0, 0] = 1.0 / t[..., 0] ** 2
        out[..., 1, 1] = -1.0 / t[..., 1] ** 2
        return out

    jeff = JeffreysForm(
        log_pi=lambda t: np.log(2.0) - np.log(t[..., 0]) + np.log(t[..., 1]), grad=jgrad, hess=jhess
    )
    grid = np.array([
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [0.5, 2.0, 0.3, 1.0, -1.0],
        [2.0, 0.7, -0.5, -0.5, 0.2],
        [1.5, 1.2, 1.0, 2.0, 0.0],
        [0.8, 0.4, -1.2, 0.0, 3.0],
    ])
    return ModelFamily(
        name="mvn2", p=5, support="real-vector", param_names=("psi1", "psi2", "beta21", "mu1", "mu2"),
        bounds=((0.0, np.inf), (0.0, np.inf), (-np.inf, np.inf), (-np.inf, np.inf), (-np.inf, np.inf)),
        log_f=log_f, sampler=sampler, nodes=nodes, fisher_closed=fisher, jeffreys_closed=jeff,
        param_shape="mvn-gamma", default_grid=grid, meta={"q": 2},
    )


_REGISTRY = {
    "bernoulli": bernoulli,
    "normal-mean": normal_mean,
    "normal-ms": normal_ms,
    "normal-ls": normal_ls,
    "linreg": linreg,
    "mvn2": mvn2,
}

MODEL_NAMES = tuple(_REGISTRY)


def get_model(name: str, design=None) -> ModelFamily:
    """Look up a registered model by name (``design`` only for ``linreg``)."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}") from None
    if name == "linreg":
        return factory(design)
    if design is not None:
        raise ConfigurationError(f"a design matrix only applies to linreg, not {name}")
    return factory()
