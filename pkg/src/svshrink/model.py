"""Contamination modes: declaration, compilation to effective moments, generation.

An observed matrix is modeled entrywise as ``Y = A * X + B`` where ``A`` is a
multiplicative random field (masks, multiplicative noise) and ``B`` an additive
random field (noise, outliers, corruption).  Every supported mode -- primitive
or composite -- is a particular per-entry distribution of the pair ``(A, B)``.
Downstream formulas consume only two statistics of that pair: the mean ``mu_a``
of the multiplicative field and the spectral-scale variance ``sigma_b2`` of the
additive field.

Noise scale convention (``spectral``): additive fields are drawn with entry
standard deviation ``sigma/sqrt(N)`` where ``N`` is the long matrix dimension,
so that the noise bulk edge sits at ``sigma_b * (1 + sqrt(beta))`` regardless
of matrix size.  Multiplicative fields and Bernoulli masks are drawn per entry,
unscaled; their variance ``sigma_a2`` is carried for diagnostics only and no
downstream formula consumes it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidModeError, SignalAnnihilatedError

ADDITIVE_NOISE = "additive_noise"
MULTIPLICATIVE_NOISE = "multiplicative_noise"
MISSING_AT_RANDOM = "missing_at_random"
OUTLIERS_AT_RANDOM = "outliers_at_random"
CORRUPTION_AT_RANDOM = "corruption_at_random"
COMPOSITE = "composite"

PRIMITIVE_KINDS = (
    ADDITIVE_NOISE,
    MULTIPLICATIVE_NOISE,
    MISSING_AT_RANDOM,
    OUTLIERS_AT_RANDOM,
    CORRUPTION_AT_RANDOM,
)

# Kinds that thin the signal with a Bernoulli keep/defect mask.  A composite
# may contain at most one of them: the paper's composite examples all share a
# single mask, and the joint semantics of two masks is undefined.
MASK_KINDS = (MISSING_AT_RANDOM, OUTLIERS_AT_RANDOM, CORRUPTION_AT_RANDOM)


@dataclass(frozen=True)
class ModeDescriptor:
    """Declarative description of a contamination mode.

    Levels are interpreted per kind: ``sigma`` is the additive or
    multiplicative noise level (spectral units), ``tau`` the outlier/corruption
    level (spectral units), and ``kappa`` the probability that an entry stays
    clean.  Irrelevant levels are ignored.
    """

    kind: str
    sigma: float = 0.0
    tau: float = 0.0
    kappa: float = 1.0
    components: tuple["ModeDescriptor", ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in PRIMITIVE_KINDS + (COMPOSITE,):
            raise InvalidModeError(f"unknown mode kind {self.kind!r}")
        if not (0.0 <= self.kappa <= 1.0):
            raise InvalidModeError(f"kappa must lie in [0, 1], got {self.kappa}")
        if self.sigma < 0.0:
            raise InvalidModeError(f"sigma must be nonnegative, got {self.sigma}")
        if self.tau < 0.0:
            raise InvalidModeError(f"tau must be nonnegative, got {self.tau}")
        object.__setattr__(self, "components", tuple(self.components))
        if self.kind == COMPOSITE:
            if not self.components:
                raise InvalidModeError("composite mode needs at least one component")
            kinds = [c.kind for c in self.components]
            if COMPOSITE in kinds:
                raise InvalidModeError("composite components must be primitive modes")
            if len(set(kinds)) != len(kinds):
                raise InvalidModeError("composite contains two components of the same kind")
            masks = [k for k in kinds if k in MASK_KINDS]
            if len(masks) > 1:
                raise InvalidModeError(
                    f"composite combines {masks[0]} with {masks[1]}; "
                    "modes with two independent masks have no defined semantics"
                )
        elif self.components:
            raise InvalidModeError("only composite modes carry components")

    # -- constructors ------------------------------------------------------

    @classmethod
    def additive_noise(cls, sigma: float) -> "ModeDescriptor":
        return cls(ADDITIVE_NOISE, sigma=sigma)

    @classmethod
    def multiplicative_noise(cls, sigma: float) -> "ModeDescriptor":
        """Entrywise factor with mean 1 and standard deviation ``sigma``."""
        return cls(MULTIPLICATIVE_NOISE, sigma=sigma)

    @classmethod
    def missing_at_random(cls, kappa: float) -> "ModeDescriptor":
        return cls(MISSING_AT_RANDOM, kappa=kappa)

    @classmethod
    def outliers_at_random(cls, kappa: float, tau: float) -> "ModeDescriptor":
        return cls(OUTLIERS_AT_RANDOM, kappa=kappa, tau=tau)

    @classmethod
    def corruption_at_random(cls, kappa: float, tau: float) -> "ModeDescriptor":
        return cls(CORRUPTION_AT_RANDOM, kappa=kappa, tau=tau)

    @classmethod
    def composite(cls, *components: "ModeDescriptor") -> "ModeDescriptor":
        return cls(COMPOSITE, components=tuple(components))

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "tau": self.tau,
            "kappa": self.kappa,
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModeDescriptor":
        if "kind" not in data:
            raise InvalidModeError("mode object must carry a 'kind' field")
        return cls(
            kind=data["kind"],
            sigma=float(data.get("sigma", 0.0)),
            tau=float(data.get("tau", 0.0)),
            kappa=float(data.get("kappa", 1.0)),
            components=tuple(cls.from_dict(c) for c in data.get("components", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModeDescriptor":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class EffectiveParams:
    """Compiled asymptotic model parameters consumed by all formulas.

    ``sigma_a2`` is the per-entry variance of the multiplicative field; it is
    diagnostic only.  ``sigma_b2`` is in spectral units: additive entries have
    standard deviation ``sqrt(sigma_b2 / N)``.
    """

    mu_a: float
    sigma_a2: float
    sigma_b2: float
    beta: float

    def __post_init__(self) -> None:
        if self.mu_a == 0.0:
            raise SignalAnnihilatedError(
                "signal annihilated: mu_a = 0 leaves nothing to rescale"
            )
        if self.sigma_a2 < 0.0 or self.sigma_b2 < 0.0:
            raise InvalidModeError("variances must be nonnegative")
        if not (0.0 < self.beta <= 1.0):
            raise InvalidModeError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def sigma_b(self) -> float:
        return math.sqrt(self.sigma_b2)

    @property
    def is_degenerate(self) -> bool:
        """True when there is no additive noise floor (sigma_b == 0)."""
        return self.sigma_b2 == 0.0


@dataclass(frozen=True)
class _MixtureForm:
    """Canonical per-entry generative form shared by all supported modes.

    With probability ``kappa`` an entry is clean: ``y = z_m * x + z_a`` where
    ``z_m`` has mean 1 and sd ``mult_sigma`` and ``z_a`` has sd
    ``add_sigma/sqrt(N)``.  Otherwise the entry is defective per ``mask_kind``:
    missing (y = 0), corruption (y = w), or outliers (y = z_m * x + w), with
    ``w`` of sd ``tau/sqrt(N)``.
    """

    mult_sigma: float
    add_sigma: float
    mask_kind: str | None
    kappa: float
    tau: float


def _mixture_form(mode: ModeDescriptor) -> _MixtureForm:
    parts = mode.components if mode.kind == COMPOSITE else (mode,)
    mult_sigma = 0.0
    add_sigma = 0.0
    mask_kind: str | None = None
    kappa = 1.0
    tau = 0.0
    for part in parts:
        if part.kind == ADDITIVE_NOISE:
            add_sigma = part.sigma
        elif part.kind == MULTIPLICATIVE_NOISE:
            mult_sigma = part.sigma
        else:
            mask_kind = part.kind
            kappa = part.kappa
            tau = part.tau
    return _MixtureForm(mult_sigma, add_sigma, mask_kind, kappa, tau)


def compile_mode(mode: ModeDescriptor, beta: float) -> EffectiveParams:
    """Compute the exact first/second moments of the (A, B) fields of a mode.

    Composite moments come from the joint generative description, not from
    naive summation: e.g. additive noise behind a missing mask contributes
    ``kappa * sigma**2`` to ``sigma_b2`` because the noise survives only on
    kept entries.
    """
    form = _mixture_form(mode)
    mult_second = 1.0 + form.mult_sigma**2  # E[z_m^2] with E[z_m] = 1

    if form.mask_kind in (MISSING_AT_RANDOM, CORRUPTION_AT_RANDOM):
        # A = M * z_m with an independent Bernoulli(kappa) keep mask
        mu_a = form.kappa
        sigma_a2 = form.kappa * mult_second - form.kappa**2
    else:
        # outliers keep the (multiplied) signal on defective entries too
        mu_a = 1.0
        sigma_a2 = form.mult_sigma**2

    defect_var = 0.0 if form.mask_kind == MISSING_AT_RANDOM else form.tau**2
    sigma_b2 = form.kappa * form.add_sigma**2
    if form.mask_kind is not None:
        sigma_b2 += (1.0 - form.kappa) * defect_var

    if mu_a == 0.0:
        raise SignalAnnihilatedError(
            "signal annihilated: every entry is defective (kappa = 0)"
        )
    return EffectiveParams(mu_a=mu_a, sigma_a2=sigma_a2, sigma_b2=sigma_b2, beta=beta)


def contaminate(
    X: np.ndarray, mode: ModeDescriptor, rng: np.random.Generator
) -> np.ndarray:
    """Draw a contaminated copy of ``X`` with independent entries per the mode.

    Additive fields are scaled by ``1/sqrt(N)`` with ``N`` the long dimension,
    so generated matrices match the spectral convention whenever ``m <= n``
    (and commute with transposition otherwise).  The draw order is fixed --
    multiplicative field, keep mask, additive noise, defect values -- so a
    seeded generator reproduces ``Y`` bit for bit.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    form = _mixture_form(mode)
    scale = 1.0 / math.sqrt(max(X.shape))

    Y = X.copy()
    if form.mult_sigma > 0.0:
        Y *= 1.0 + form.mult_sigma * rng.standard_normal(X.shape)

    keep = None
    if form.mask_kind is not None:
        keep = rng.random(X.shape) < form.kappa

    if form.add_sigma > 0.0:
        noise = (form.add_sigma * scale) * rng.standard_normal(X.shape)
        if keep is None:
            Y += noise
        else:
            Y[keep] += noise[keep]

    if form.mask_kind is not None:
        defect = ~keep
        if form.mask_kind == MISSING_AT_RANDOM:
            Y[defect] = 0.0
        else:
            w = (form.tau * scale) * rng.standard_normal(X.shape)
            if form.mask_kind == CORRUPTION_AT_RANDOM:
                Y[defect] = w[defect]
            else:  # outliers: heavy noise on top of the kept signal
                Y[defect] += w[defect]
    return Y


@dataclass(frozen=True)
class EmpiricalParams:
    """Monte Carlo estimates of the field moments, with standard errors."""

    mu_a: float
    sigma_a2: float
    sigma_b2: float
    se_mu_a: float
    se_sigma_a2: float
    se_sigma_b2: float
    trials: int

    def as_params(self, beta: float) -> EffectiveParams:
        return EffectiveParams(
            mu_a=self.mu_a, sigma_a2=self.sigma_a2, sigma_b2=self.sigma_b2, beta=beta
        )


def empirical_params(
    mode: ModeDescriptor, trials: int, rng: np.random.Generator
) -> EmpiricalParams:
    """Brute-force moment estimate, sampling the (A, B) fields directly.

    B is sampled unscaled (spectral units), so the second moment of the draws
    estimates ``sigma_b2`` without reference to a matrix size.  Used as the
    sampling oracle against :func:`compile_mode`.
    """
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials for a meaningful estimate")
    form = _mixture_form(mode)

    z_m = np.ones(trials)
    if form.mult_sigma > 0.0:
        z_m += form.mult_sigma * rng.standard_normal(trials)
    keep = np.ones(trials, dtype=bool)
    if form.mask_kind is not None:
        keep = rng.random(trials) < form.kappa

    if form.mask_kind in (MISSING_AT_RANDOM, CORRUPTION_AT_RANDOM):
        a = np.where(keep, z_m, 0.0)
    else:
        a = z_m

    b = np.zeros(trials)
    if form.add_sigma > 0.0:
        b[keep] = form.add_sigma * rng.standard_normal(int(keep.sum()))
    if form.mask_kind in (CORRUPTION_AT_RANDOM, OUTLIERS_AT_RANDOM):
        defect = ~keep
        b[defect] = form.tau * rng.standard_normal(int(defect.sum()))

    mu_a = float(np.mean(a))
    sigma_a2 = float(np.var(a, ddof=1))
    b2 = b * b  # E[B] = 0 by construction, so the raw second moment estimates the variance
    sigma_b2 = float(np.mean(b2))

    se_mu_a = float(np.std(a, ddof=1) / math.sqrt(trials))
    centered = a - mu_a
    m4 = float(np.mean(centered**4))
    se_sigma_a2 = math.sqrt(max(m4 - sigma_a2**2, 0.0) / trials)
    se_sigma_b2 = float(np.std(b2, ddof=1) / math.sqrt(trials))
    return EmpiricalParams(
        mu_a=mu_a,
        sigma_a2=sigma_a2,
        sigma_b2=sigma_b2,
        se_mu_a=se_mu_a,
        se_sigma_a2=se_sigma_a2,
        se_sigma_b2=se_sigma_b2,
        trials=trials,
    )
