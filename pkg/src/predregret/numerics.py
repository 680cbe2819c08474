"""Deterministic numerical kernels.

Finite differences with Richardson extrapolation, Gauss-Legendre and
Gauss-Hermite rules (plain and adaptive tensor-product), seeded Monte Carlo
averaging, and log-domain weighted sums.

Array conventions: a "point" is an array whose last axis holds the ``p``
coordinates; leading axes are batch axes and are broadcast through.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, NonConvergenceError

EPS = np.finfo(float).eps
GRAD_STEP = EPS ** (1.0 / 3.0)
HESS_STEP = EPS ** (1.0 / 6.0)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def default_step(x, order: int = 1) -> np.ndarray:
    """Central-difference step ``base * max(1, |x|)`` per coordinate."""
    base = GRAD_STEP if order == 1 else HESS_STEP
    return base * np.maximum(1.0, np.abs(np.asarray(x, dtype=float)))


def _checked(f, z):
    with np.errstate(all="ignore"):
        val = np.asarray(f(z), dtype=float)
    if not np.all(np.isfinite(val)):
        raise DomainError("non-finite function value on the difference stencil")
    return val


def _gradient(f, x, h):
    p = x.shape[-1]
    out = np.empty(x.shape, dtype=float)
    for i in range(p):
        e = np.zeros(p)
        e[i] = 1.0
        hi = h[..., i]
        step = hi[..., None] * e
        out[..., i] = (_checked(f, x + step) - _checked(f, x - step)) / (2.0 * hi)
    return out


def _hessian(f, x, h):
    p = x.shape[-1]
    out = np.empty(x.shape + (p,), dtype=float)
    f0 = _checked(f, x)
    eye = np.eye(p)
    for i in range(p):
        si = h[..., i, None] * eye[i]
        hi = h[..., i]
        out[..., i, i] = (_checked(f, x + si) - 2.0 * f0 + _checked(f, x - si)) / hi**2
        for j in range(i):
            sj = h[..., j, None] * eye[j]
            hj = h[..., j]
            val = (
                _checked(f, x + si + sj)
                - _checked(f, x + si - sj)
                - _checked(f, x - si + sj)
                + _checked(f, x - si - sj)
            ) / (4.0 * hi * hj)
            out[..., i, j] = val
            out[..., j, i] = val
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def central_diff(f: Callable, x, order: int = 1, richardson: bool = True, step=None):
    """Gradient (``order=1``) or Hessian (``order=2``) of a scalar field.

    ``f`` maps points of shape ``(..., p)`` to values of shape ``(...)``. A
    scalar ``x`` is treated as a one-dimensional point and the result is then
    returned as a scalar as well. With ``richardson`` the step-``h`` and
    step-``h/2`` estimates are combined to cancel the ``h**2`` error term.

    Raises
    ------
    DomainError
        If ``f`` is non-finite anywhere on the stencil.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    if scalar:
        g = f
        f = lambda z: g(z[..., 0])  # noqa: E731
        x = x[None]
    h = default_step(x, order) if step is None else np.broadcast_to(np.asarray(step, float), x.shape)
    kernel = _gradient if order == 1 else _hessian
    est = kernel(f, x, h)
    if richardson:
        est = (4.0 * kernel(f, x, h / 2.0) - est) / 3.0
    if scalar:
        return est[0] if order == 1 else est[0, 0]
    return est


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    kind: str  # "legendre" | "hermite"
    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=64)
def _legendre_base(count: int):
    x, w = np.polynomial.legendre.leggauss(count)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=16)
def _hermite_base(count: int):
    x, w = np.polynomial.hermite_e.hermegauss(count)
    w = w / np.sqrt(2.0 * np.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(count: int, lo: float = -1.0, hi: float = 1.0) -> QuadratureRule:
    """Gauss-Legendre rule for plain integrals over ``[lo, hi]``."""
    x, w = _legendre_base(count)
    half = 0.5 * (hi - lo)
    return QuadratureRule("legendre", lo + half * (x + 1.0), half * w, (lo, hi))


def gauss_hermite(count: int = 64, mean: float = 0.0, sd: float = 1.0) -> QuadratureRule:
    """Gauss-Hermite rule for expectations under ``N(mean, sd**2)``.

    The weights sum to one, so ``integrate(rule, f)`` is ``E f(Z)``.
    """
    x, w = _hermite_base(count)
    return QuadratureRule("hermite", mean + sd * x, w.copy(), (mean, sd))


def integrate(rule: QuadratureRule, f: Callable) -> float:
    return float(np.dot(rule.weights, np.asarray(f(rule.nodes), dtype=float)))


def tensor_legendre(counts: Sequence[int], box: Sequence[tuple]) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss-Legendre nodes ``(N, d)`` and weights ``(N,)``."""
    rules = [gauss_legendre(c, lo, hi) for c, (lo, hi) in zip(counts, box)]
    grids = np.meshgrid(*[r.nodes for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r.weights for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def adaptive_integrate(
    f: Callable,
    domain,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-14,
    start: int = 16,
    max_nodes: int = 2**14,
) -> float:
    """Integrate ``f`` over an interval or box by node doubling.

    ``domain`` is ``(lo, hi)`` or a sequence of such pairs. In one dimension
    ``f`` receives a ``(N,)`` array, otherwise ``(N, d)``. Each coordinate's
    node count is doubled independently until doubling it no longer moves the
    estimate by more than ``max(rel_tol * |I|, abs_tol)``.

    Raises
    ------
    NonConvergenceError
        When the total node count would exceed ``max_nodes``; the error carries
        the last two estimates.
    """
    box = [tuple(map(float, domain))] if np.ndim(domain[0]) == 0 else [tuple(map(float, d)) for d in domain]
    dim = len(box)

    def estimate(counts):
        nodes, weights = tensor_legendre(counts, box)
        vals = np.asarray(f(nodes[:, 0] if dim == 1 else nodes), dtype=float)
        return float(np.dot(weights, vals))

    counts = [start] * dim
    current = estimate(counts)
    while True:
        settled = True
        for d in range(dim):
            trial = list(counts)
            trial[d] *= 2
            if int(np.prod(trial)) > max_nodes:
                raise NonConvergenceError(
                    f"quadrature did not reach rel_tol={rel_tol:g} within {max_nodes} nodes",
                    previous=current,
                    current=estimate(counts),
                )
            refined = estimate(trial)
            if abs(refined - current) > max(rel_tol * abs(refined), abs_tol):
                settled = False
                counts = trial
            current = refined
        if settled:
            return current


# ---------------------------------------------------------------------------
# seeded Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeededStream:
    """Counter-based random stream identified by ``(master_seed, stream_id)``."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, index: int) -> "SeededStream":
        # distinct ids for sub-streams without colliding with sibling streams
        return SeededStream(self.master_seed, self.stream_id * 1_000_003 + index + 1)


def mc_mean(stream: SeededStream, sampler: Callable, statistic: Callable, replicates: int):
    """Monte Carlo mean and standard error of ``statistic(sampler(rng))``."""
    if replicates < 2:
        raise ValueError("replicates must be at least 2")
    rng = stream.generator()
    vals = np.array([statistic(sampler(rng)) for _ in range(replicates)], dtype=float)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(replicates))


# ---------------------------------------------------------------------------
# log-domain sums
# ---------------------------------------------------------------------------

def expect_log_weighted(log_w, values) -> float:
    """``sum(exp(log_w) * values)`` with a max-shift on the weights.

    Cells with ``log_w == -inf`` are dropped, so ``values`` may be non-finite
    there (e.g. log-probabilities of impossible outcomes).
    """
    log_w = np.asarray(log_w, dtype=float)
    values = np.broadcast_to(np.asarray(values, dtype=float), log_w.shape)
    keep = np.isfinite(log_w)
    if not keep.any():
        return 0.0
    lw = log_w[keep]
    shift = lw.max()
    return float(np.exp(shift) * np.sum(np.exp(lw - shift) * values[keep]))


def log_mean_exp(a, axis=None, b=None):
    return logsumexp(a, axis=axis, b=b)
