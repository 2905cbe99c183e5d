"""Model parameter estimation from data.

``sigma_b`` comes from median matching: the median data singular value is
insensitive to a handful of strong signal components, so dividing it by the
Marčenko–Pastur median pins the noise scale.  ``mu_a`` is only estimable for
the missing/corruption family (fraction of surviving entries); other modes
need a user-supplied value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError
from .spectrum import MpLaw, mp_median


@dataclass(frozen=True)
class EstimationReport:
    sigma_b_hat: float
    mu_a_hat: float | None
    method: str
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sigma_b_hat": self.sigma_b_hat,
            "mu_a_hat": self.mu_a_hat,
            "method": self.method,
            "inputs": dict(self.inputs),
        }


def spectrum_median(singular_values: np.ndarray) -> float:
    """Deterministic median pick: entry ceil(m/2) of the descending spectrum
    (1-based), i.e. the single order statistic rather than a two-value mean."""
    values = np.asarray(singular_values, dtype=float)
    return float(values[math.ceil(values.size / 2) - 1])


def estimate_sigma_b(singular_values, n: int, beta: float) -> float:
    """Noise level from the median data singular value.

    Under the spectral convention the matrix size cancels out of the paper's
    per-entry formula and the estimate is simply ``y_med / mp_median(beta, 1)``;
    ``n`` is carried for reporting only.
    """
    values = np.asarray(singular_values, dtype=float)
    if values.size < 3:
        raise EstimationError("need at least 3 singular values")
    if np.any(np.diff(values) > 0):
        raise EstimationError("singular values must be in descending order")
    if np.any(values < 0):
        raise EstimationError("singular values must be nonnegative")
    if not np.any(values > 0):
        raise EstimationError("no spectrum: all singular values are zero")
    y_med = spectrum_median(values)
    return y_med / mp_median(MpLaw(beta=beta, sigma=1.0))


def estimate_mu_a_missing(Y: np.ndarray) -> float:
    """Fraction of surviving (nonzero) entries; estimates ``mu_a`` for the
    missing-at-random family, where defective entries are exactly zero."""
    Y = np.asarray(Y, dtype=float)
    if not np.all(np.isfinite(Y)):
        raise ValueError("Y must be finite")
    return 1.0 - float(np.count_nonzero(Y == 0.0)) / Y.size


def estimate_params(Y: np.ndarray, assume_missing: bool = False) -> EstimationReport:
    """Full estimation pass over a data matrix.

    Transposes internally when ``m > n`` so the aspect ratio stays in (0, 1].
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be a 2-d matrix")
    m, n = (Y.shape if Y.shape[0] <= Y.shape[1] else Y.shape[::-1])
    beta = m / n
    values = np.linalg.svd(Y, compute_uv=False)
    sigma_b_hat = estimate_sigma_b(values, n=n, beta=beta)
    mu_a_hat = estimate_mu_a_missing(Y) if assume_missing else None
    method = "median_matching"
    if assume_missing:
        method += "+missing_fraction"
    return EstimationReport(
        sigma_b_hat=sigma_b_hat,
        mu_a_hat=mu_a_hat,
        method=method,
        inputs={
            "n": n,
            "m": m,
            "median_singular_value": spectrum_median(values),
        },
    )
