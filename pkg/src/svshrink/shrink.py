"""Singular-value estimators: optimal shrinker, optimal hard threshold, TSVD.

Scaling convention: the optimal shrinker already embeds the ``1/mu_a``
rescaling in its formula, while hard thresholding and TSVD keep raw data
singular values and therefore rescale kept values by ``1/mu_a``.  Both are
unified behind :func:`apply_rule`, so callers never multiply by ``mu_a``
themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EffectiveParams
from .spectrum import bulk_edge

OPTIMAL_SHRINKER = "optimal_shrinker"
HARD_THRESHOLD = "hard_threshold"
TSVD = "tsvd"
ZERO = "zero"


def breakeven_snr(beta: float) -> float:
    """Signal-to-noise ratio ``mu_a x / sigma_b`` at which keeping and killing
    a singular value cost the same asymptotic error.

    Equals ``sqrt((1 + beta + sqrt(1 + 14 beta + beta^2)) / 2)``.
    """
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return math.sqrt((1.0 + beta + math.sqrt(1.0 + 14.0 * beta + beta**2)) / 2.0)


def optimal_threshold(params: EffectiveParams) -> float:
    """The unique asymptotically optimal hard threshold for data singular values.

    Closed form ``sigma_b * sqrt((c + 1/c)(c + beta/c))`` with
    ``c = breakeven_snr(beta)``; this is the displaced image of the breakeven
    signal level.  Degenerate noiseless modes get threshold 0.
    """
    if params.is_degenerate:
        return 0.0
    c = breakeven_snr(params.beta)
    return params.sigma_b * math.sqrt((c + 1.0 / c) * (c + params.beta / c))


def optimal_shrinker(y, params: EffectiveParams):
    """Asymptotically optimal shrinkage of a data singular value ``y``.

    Zero at and below the bulk edge, and continuous there: the radicand
    ``((y/sigma_b)^2 - beta - 1)^2 - 4 beta`` vanishes at the edge.  It is
    evaluated in the factored form ``(u - hi_u)(u - lo_u)`` (``u = (y/s)^2``,
    edges in squared units), which is exact at the branch point.  In the
    degenerate noiseless case the shrinker is the plain ``y / mu_a`` rescaling.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0.0):
        raise ValueError("data singular values must be nonnegative")
    if params.is_degenerate:
        out = y_arr / params.mu_a
        return out if isinstance(y, np.ndarray) else float(out)
    s = params.sigma_b
    root = math.sqrt(params.beta)
    hi_u = (1.0 + root) ** 2
    lo_u = (1.0 - root) ** 2
    u = (y_arr / s) ** 2
    keep = u >= hi_u
    y_safe = np.where(keep, y_arr, 1.0)
    u_safe = np.where(keep, u, hi_u)
    rad = np.clip((u_safe - hi_u) * (u_safe - lo_u), 0.0, None)
    val = (s * s / (y_safe * params.mu_a)) * np.sqrt(rad)
    out = np.where(keep, val, 0.0)
    return out if isinstance(y, np.ndarray) else float(out)


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``Y = left @ diag(values) @ right.T`` with descending values."""

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self, values: np.ndarray | None = None) -> np.ndarray:
        v = self.values if values is None else np.asarray(values, dtype=float)
        return (self.left * v) @ self.right.T


def svd(Y: np.ndarray) -> SvdFactorization:
    """Dense SVD via LAPACK with this package's factorization contract.

    Convergence failures propagate as ``numpy.linalg.LinAlgError``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be a 2-d matrix")
    if not np.all(np.isfinite(Y)):
        raise ValueError("Y must be finite")
    u, s, vh = np.linalg.svd(Y, full_matrices=False)
    return SvdFactorization(values=s, left=u, right=vh.T)


@dataclass(frozen=True)
class ShrinkageRule:
    """Maps the descending data singular values to estimated coefficients.

    Every rule sends values at or below the bulk edge to zero except
    ``tsvd``, which keeps exactly the top ``rank`` values regardless of
    magnitude.
    """

    kind: str
    params: EffectiveParams
    threshold: float | None = None
    rank: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (OPTIMAL_SHRINKER, HARD_THRESHOLD, TSVD, ZERO):
            raise ValueError(f"unknown shrinkage rule kind {self.kind!r}")
        if self.kind == HARD_THRESHOLD:
            if self.threshold is None or self.threshold < 0.0:
                raise ValueError("hard_threshold needs a nonnegative threshold")
        if self.kind == TSVD and (self.rank is None or self.rank < 0):
            raise ValueError("tsvd needs a nonnegative rank")

    @classmethod
    def optimal(cls, params: EffectiveParams) -> "ShrinkageRule":
        return cls(OPTIMAL_SHRINKER, params)

    @classmethod
    def hard(cls, threshold: float, params: EffectiveParams) -> "ShrinkageRule":
        return cls(HARD_THRESHOLD, params, threshold=threshold)

    @classmethod
    def optimal_hard(cls, params: EffectiveParams) -> "ShrinkageRule":
        return cls(HARD_THRESHOLD, params, threshold=optimal_threshold(params))

    @classmethod
    def tsvd(cls, rank: int, params: EffectiveParams) -> "ShrinkageRule":
        return cls(TSVD, params, rank=rank)

    @classmethod
    def zero(cls, params: EffectiveParams) -> "ShrinkageRule":
        return cls(ZERO, params)

    def shrink(self, values: np.ndarray) -> np.ndarray:
        """Shrunk coefficients for a descending spectrum, 1/mu_a included."""
        values = np.asarray(values, dtype=float)
        if self.kind == ZERO:
            return np.zeros_like(values)
        if self.kind == OPTIMAL_SHRINKER:
            return np.asarray(optimal_shrinker(values, self.params))
        if self.kind == HARD_THRESHOLD:
            # keep on strictly greater; ties at the threshold are killed
            return np.where(values > self.threshold, values / self.params.mu_a, 0.0)
        out = np.zeros_like(values)
        k = min(self.rank, values.size)
        out[:k] = values[:k] / self.params.mu_a
        return out


def apply_rule(Y: np.ndarray, rule: ShrinkageRule) -> np.ndarray:
    """Estimate the clean matrix by shrinking the singular values of ``Y``.

    Inputs with more rows than columns are transposed internally (so the
    aspect ratio stays in (0, 1]) and the estimate is transposed back.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be a 2-d matrix")
    if not np.all(np.isfinite(Y)):
        raise ValueError("Y must be finite")
    transposed = Y.shape[0] > Y.shape[1]
    work = Y.T if transposed else Y
    if rule.kind == ZERO:
        return np.zeros_like(Y)
    fact = svd(work)
    est = fact.reconstruct(rule.shrink(fact.values))
    return est.T if transposed else est
