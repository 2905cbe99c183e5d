"""Asymptotic spectral quantities: Marčenko–Pastur law, displacement map, cosines.

All formulas are stated for singular values (not eigenvalues) of an ``m x n``
matrix with aspect ratio ``beta = m/n <= 1`` whose additive noise follows the
spectral convention of :mod:`svshrink.model`.  The pure-noise singular values
fill the bulk ``[sigma_b(1-sqrt(beta)), sigma_b(1+sqrt(beta))]``; a signal
value ``x`` strong enough to escape the bulk is displaced to a predictable
location above the edge, with predictable alignment between the true and
empirical singular vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .model import EffectiveParams

# Radicands mathematically >= 0 may drift slightly negative in floating point
# just above the bulk edge; values within this margin are clamped to zero.
_CLAMP = 1e-12


@dataclass(frozen=True)
class MpLaw:
    """Marčenko–Pastur singular-value law with aspect ratio beta, scale sigma."""

    beta: float
    sigma: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def support(self) -> tuple[float, float]:
        root = math.sqrt(self.beta)
        return self.sigma * (1.0 - root), self.sigma * (1.0 + root)


def mp_density(t, law: MpLaw):
    """Density of the MP singular-value law; zero outside the support.

    Equivalent to sqrt(4 sigma^4 beta - (t^2 - sigma^2 - sigma^2 beta)^2)
    / (pi sigma^2 beta t), evaluated through the factored radicand
    (t^2 - lo^2)(hi^2 - t^2) which stays stable at both edges.
    """
    lo, hi = law.support
    t_arr = np.asarray(t, dtype=float)
    inside = (t_arr > lo) & (t_arr < hi)
    rad = (t_arr * t_arr - lo * lo) * (hi * hi - t_arr * t_arr)
    denom = math.pi * law.sigma**2 * law.beta * np.where(inside, t_arr, 1.0)
    out = np.where(inside, np.sqrt(np.clip(rad, 0.0, None)) / denom, 0.0)
    return out if isinstance(t, np.ndarray) else float(out)


def _unit_cdf(s: float, beta: float) -> float:
    """CDF of the unit-scale law, integrated adaptively after the substitution
    t = lo + (hi - lo) sin^2(theta), which removes the square-root edge
    behavior of the density."""
    law = MpLaw(beta=beta, sigma=1.0)
    lo, hi = law.support
    if s <= lo:
        return 0.0
    if s >= hi:
        return 1.0
    span = hi - lo
    theta_s = math.asin(math.sqrt((s - lo) / span))

    def integrand(theta: float) -> float:
        t = lo + span * math.sin(theta) ** 2
        return mp_density(t, law) * span * math.sin(2.0 * theta)

    val, _ = integrate.quad(integrand, 0.0, theta_s, epsabs=1e-12, limit=200)
    return val


def mp_cdf(t: float, law: MpLaw) -> float:
    """Cumulative distribution of the MP singular-value law at ``t``."""
    return _unit_cdf(t / law.sigma, law.beta)


@lru_cache(maxsize=64)
def _unit_median(beta: float) -> float:
    law = MpLaw(beta=beta, sigma=1.0)
    lo, hi = law.support
    return float(
        optimize.brentq(
            lambda s: _unit_cdf(s, beta) - 0.5,
            lo + 1e-12,
            hi - 1e-12,
            xtol=1e-12,
            rtol=8.9e-16,
        )
    )


def mp_median(law: MpLaw) -> float:
    """Median of the law, ``sigma`` times the cached unit-scale median.

    The law is scale equivariant, so solving at unit scale once per ``beta``
    makes ``mp_median(beta, sigma) == sigma * mp_median(beta, 1)`` exact.
    """
    return law.sigma * _unit_median(law.beta)


def bulk_edge(params: EffectiveParams) -> float:
    """Largest pure-noise singular value, ``sigma_b (1 + sqrt(beta))``.

    Returns 0 in the degenerate noiseless case (sigma_b == 0): every nonzero
    data singular value then sits above the "bulk".
    """
    return params.sigma_b * (1.0 + math.sqrt(params.beta))


def _transition_xbar(params: EffectiveParams) -> float:
    """Rescaled signal level below which a component is lost in the bulk."""
    return params.sigma_b * params.beta**0.25


def displace(x, params: EffectiveParams):
    """Limit of the data singular value paired with a signal value ``x``.

    Subcritical components (``mu_a * x <= sigma_b * beta**0.25``) are pinned
    at the bulk edge.  In the noiseless degenerate case the map is the exact
    rescaling ``mu_a * x``.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("signal singular values must be positive")
    xbar = params.mu_a * x_arr
    if params.is_degenerate:
        out = xbar
        return out if isinstance(x, np.ndarray) else float(out)
    s = params.sigma_b
    above = xbar > _transition_xbar(params)
    t = np.where(above, xbar / s, 1.0)
    y = s * np.sqrt((t + 1.0 / t) * (t + params.beta / t))
    out = np.where(above, y, bulk_edge(params))
    return out if isinstance(x, np.ndarray) else float(out)


def inverse_displace(y, params: EffectiveParams):
    """Signal value whose displaced image is ``y``; 0 at or below the bulk edge.

    The inner radicand ``(1 + beta - (y/sigma_b)^2)^2 - 4 beta`` is evaluated
    in the factored form ``(u - hi_u)(u - lo_u)`` with ``u = (y/sigma_b)^2``
    and clamped at zero, so cancellation just above the edge cannot produce
    NaN.
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
    above = u > hi_u
    u_safe = np.where(above, u, hi_u)
    rad = (u_safe - hi_u) * (u_safe - lo_u)
    rad = np.where(rad > -_CLAMP, np.clip(rad, 0.0, None), rad)
    x = (s / (math.sqrt(2.0) * params.mu_a)) * np.sqrt(
        u_safe - params.beta - 1.0 + np.sqrt(rad)
    )
    out = np.where(above, x, 0.0)
    return out if isinstance(y, np.ndarray) else float(out)


def _cos2(x, params: EffectiveParams, beta_in_denominator: bool):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("signal singular values must be positive")
    if params.is_degenerate:
        out = np.ones_like(x_arr)
        return out if isinstance(x, np.ndarray) else float(out)
    t = params.mu_a * x_arr / params.sigma_b
    above = t > params.beta**0.25
    t_safe = np.where(above, t, 1.0)
    t2, t4 = t_safe**2, t_safe**4
    denom = t4 + (params.beta * t2 if beta_in_denominator else t2)
    val = np.clip((t4 - params.beta) / denom, 0.0, 1.0)
    out = np.where(above, val, 0.0)
    return out if isinstance(x, np.ndarray) else float(out)


def cos2_left(x, params: EffectiveParams):
    """Limiting squared cosine between true and empirical left singular vectors."""
    return _cos2(x, params, beta_in_denominator=True)


def cos2_right(x, params: EffectiveParams):
    """Limiting squared cosine between true and empirical right singular vectors."""
    return _cos2(x, params, beta_in_denominator=False)
