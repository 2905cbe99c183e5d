"""Closed-form asymptotic mean square error (AMSE) and derived quantities.

The AMSE of shrinkage estimators decomposes into a sum of per-signal-value
terms.  Everything here is expressed through the signal-to-noise ratio
``t = mu_a * x / sigma_b``: components with ``t`` below ``beta**(1/4)`` are
undetectable and cost ``x^2`` (the zero-rule loss), detectable components cost
a closed form that depends on the rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EffectiveParams
from .shrink import (
    HARD_THRESHOLD,
    OPTIMAL_SHRINKER,
    TSVD,
    ZERO,
    breakeven_snr,
    optimal_threshold,
)
from .spectrum import bulk_edge, displace, inverse_displace

_EDGE_SLACK = 1e-9  # tolerated rounding when validating lambda >= bulk edge


@dataclass(frozen=True)
class RiskProfile:
    """Per-signal-value AMSE terms and their total for one rule."""

    rule: str
    per_value: tuple[tuple[float, float], ...]
    total: float
    detectable: tuple[bool, ...]

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "per_value": [{"x": x, "amse": v} for x, v in self.per_value],
            "total": self.total,
            "detectable": list(self.detectable),
        }


def shrinker_amse(x: float, params: EffectiveParams) -> float:
    """AMSE contribution of one signal value under the optimal shrinker.

    ``x^2 (1 - (t^4 - beta)^2 / ((t^4 + beta t^2)(t^4 + t^2)))`` above the
    detectability transition, ``x^2`` below; continuous at the transition
    where the fraction vanishes.
    """
    if x <= 0.0:
        raise ValueError("signal singular values must be positive")
    if params.is_degenerate:
        return 0.0
    t = params.mu_a * x / params.sigma_b
    if t < params.beta**0.25:
        return x * x
    t2 = t * t
    t4 = t2 * t2
    frac = (t4 - params.beta) ** 2 / ((t4 + params.beta * t2) * (t4 + t2))
    return x * x * (1.0 - frac)


def threshold_amse(x: float, lam: float, params: EffectiveParams) -> float:
    """AMSE contribution of one signal value under hard thresholding at ``lam``.

    The branch is chosen in the data domain -- the value is kept iff its
    displaced image exceeds ``lam``, which is exactly what hard thresholding
    does to the data singular value.  Thresholds below the bulk edge are not
    covered by the theory and are rejected.
    """
    if x <= 0.0:
        raise ValueError("signal singular values must be positive")
    if params.is_degenerate:
        return 0.0 if params.mu_a * x > lam else x * x
    edge = bulk_edge(params)
    if lam < edge - _EDGE_SLACK:
        raise ValueError(
            f"threshold {lam} below the bulk edge {edge}; the AMSE formula "
            "assumes lambda >= sigma_b (1 + sqrt(beta))"
        )
    if displace(x, params) <= lam:
        return x * x
    t = params.mu_a * x / params.sigma_b
    ratio = params.sigma_b / params.mu_a
    keep = (t + 1.0 / t) * (t + params.beta / t) - (t * t - 2.0 * params.beta / (t * t))
    return ratio * ratio * keep


def _per_value_amse(x: float, rule: str, params: EffectiveParams) -> float:
    if rule == OPTIMAL_SHRINKER:
        return shrinker_amse(x, params)
    if rule == HARD_THRESHOLD:
        return threshold_amse(x, optimal_threshold(params), params)
    if rule == TSVD:
        # the Theorem-4 baseline: hard thresholding at the bulk edge
        return threshold_amse(x, bulk_edge(params), params)
    if rule == ZERO:
        return x * x
    raise ValueError(f"unknown rule kind {rule!r}")


def total_amse(x_values, rule: str, params: EffectiveParams) -> RiskProfile:
    """Sum the per-value AMSE over a strictly decreasing signal spectrum."""
    x = np.asarray(x_values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("need a nonempty 1-d signal spectrum")
    if np.any(x <= 0.0):
        raise ValueError("signal singular values must be positive")
    if np.any(np.diff(x) >= 0.0):
        raise ValueError("signal singular values must be strictly decreasing")
    per = tuple((float(xi), _per_value_amse(float(xi), rule, params)) for xi in x)
    detect = tuple(
        bool(params.mu_a * xi > params.sigma_b * params.beta**0.25) for xi in x
    )
    return RiskProfile(
        rule=rule,
        per_value=per,
        total=float(sum(v for _, v in per)),
        detectable=detect,
    )


def critical_level(rule: str, params: EffectiveParams) -> float:
    """Smallest signal value at which the rule beats the zero rule.

    ``(sigma_b / mu_a) * beta**(1/4)`` for the optimal shrinker (the
    detectability transition itself) and ``(sigma_b / mu_a) * breakeven_snr``
    for the optimal hard threshold.
    """
    if params.sigma_b2 < 0 or params.mu_a == 0:
        raise ValueError("need sigma_b >= 0 and mu_a != 0")
    ratio = params.sigma_b / params.mu_a
    if rule == OPTIMAL_SHRINKER:
        return ratio * params.beta**0.25
    if rule == HARD_THRESHOLD:
        return ratio * breakeven_snr(params.beta)
    raise ValueError("critical levels are defined for optimal_shrinker and hard_threshold")


def worst_case_mse(
    rule: str,
    r: int,
    params: EffectiveParams,
    method: str = "closed_form",
    t_max: float = 100.0,
    grid_points: int = 4001,
) -> float:
    """Worst-case AMSE over rank-``r`` signals.

    ``closed_form`` returns the square-aspect constants 5r / 2r / 3r times
    ``(sigma_b/mu_a)^2`` for TSVD / optimal shrinker / optimal threshold and
    is only stated for ``beta == 1``.  ``numerical`` maximizes the per-value
    AMSE over a signal grid for any beta; for threshold rules the grid
    includes both branch values at the keep/kill boundary (the supremum of
    the open keep region is attained on its closure), and for the shrinker
    the supremum is approached as the signal grows, so the grid extends to
    ``t = t_max``.
    """
    if r < 1:
        raise ValueError("rank must be at least 1")
    ratio2 = (params.sigma_b / params.mu_a) ** 2
    if method == "closed_form":
        if params.beta != 1.0:
            raise ValueError("closed-form worst cases are stated for beta = 1 only")
        constants = {TSVD: 5.0, OPTIMAL_SHRINKER: 2.0, HARD_THRESHOLD: 3.0}
        if rule not in constants:
            raise ValueError(f"no worst-case constant for rule {rule!r}")
        return constants[rule] * r * ratio2
    if method != "numerical":
        raise ValueError("method must be 'closed_form' or 'numerical'")

    scale = params.sigma_b / params.mu_a  # signal value per unit of t
    if rule == OPTIMAL_SHRINKER:
        t_grid = np.linspace(params.beta**0.25, t_max, grid_points)
        sup = max(shrinker_amse(float(t) * scale, params) for t in t_grid)
        return sup * r
    if rule in (HARD_THRESHOLD, TSVD):
        lam = optimal_threshold(params) if rule == HARD_THRESHOLD else bulk_edge(params)
        xbar_b = max(
            params.sigma_b * params.beta**0.25,
            params.mu_a * inverse_displace(lam, params),
        )
        x_b = xbar_b / params.mu_a
        sup = x_b * x_b  # kill branch peaks at the boundary (killed on ties)
        t_b = xbar_b / params.sigma_b
        keep = lambda t: (params.sigma_b / params.mu_a) ** 2 * (
            (t + 1.0 / t) * (t + params.beta / t)
            - (t * t - 2.0 * params.beta / (t * t))
        )
        for t in np.linspace(t_b, t_max, grid_points):
            sup = max(sup, keep(float(t)))
        return sup * r
    raise ValueError(f"no worst case for rule {rule!r}")


def risk_curve(x_values, params: EffectiveParams) -> list[dict]:
    """Per-x AMSE of the three main rules, for CSV export / plotting."""
    lam = optimal_threshold(params)
    edge = bulk_edge(params)
    rows = []
    for x in np.asarray(x_values, dtype=float):
        x = float(x)
        rows.append(
            {
                "x": x,
                "amse_shrinker": shrinker_amse(x, params),
                "amse_threshold": threshold_amse(x, lam, params),
                "amse_tsvd": threshold_amse(x, edge, params),
            }
        )
    return rows
