"""Monte Carlo harness: signal generation and the verification experiments.

Reproducibility contract: every trial owns a private random stream derived
from the master seed by the splitting rule
``default_rng(SeedSequence(master_seed, spawn_key=(trial_index,)))``.
Trials are therefore independent, order-insensitive, and safe to fan out
across a worker pool; results aggregate by trial index.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import EffectiveParams, ModeDescriptor, compile_mode, contaminate
from .risk import critical_level, total_amse
from .shrink import (
    HARD_THRESHOLD,
    OPTIMAL_SHRINKER,
    TSVD,
    ZERO,
    ShrinkageRule,
    breakeven_snr,
    optimal_shrinker,
    optimal_threshold,
    svd,
)
from .spectrum import bulk_edge, cos2_left, cos2_right, displace

DEFAULT_SEED = 42

RECORD_COLUMNS = (
    "seed",
    "x",
    "kappa",
    "y1",
    "cos2_left",
    "cos2_right",
    "mse_shrinker",
    "mse_threshold",
    "mse_tsvd",
    "mse_zero",
)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """The documented stream-splitting rule for Monte Carlo trials."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    )


@dataclass(frozen=True)
class SignalSpec:
    """Low-rank test signal: dimensions plus a strictly decreasing spectrum."""

    m: int
    n: int
    x: tuple[float, ...]
    vector_model: str = "haar"

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if self.vector_model != "haar":
            raise ValueError("only the 'haar' vector model is generated")
        if not (0 < len(self.x) <= self.m <= self.n):
            raise ValueError("need rank <= m <= n")
        if any(v <= 0 for v in self.x):
            raise ValueError("signal singular values must be positive")
        if any(a <= b for a, b in zip(self.x, self.x[1:])):
            raise ValueError("signal singular values must be strictly decreasing")

    @property
    def rank(self) -> int:
        return len(self.x)

    @property
    def beta(self) -> float:
        return self.m / self.n


@dataclass(frozen=True)
class SignalFactors:
    matrix: np.ndarray
    left: np.ndarray
    values: np.ndarray
    right: np.ndarray


def _haar_frame(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthonormal frame via QR of a Gaussian block.

    Column signs are fixed (first entry of magnitude > 1e-12 made positive)
    so the frame is a deterministic function of the draws.
    """
    g = rng.standard_normal((dim, rank))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))  # canonical Haar correction
    for j in range(rank):
        col = q[:, j]
        lead = col[np.abs(col) > 1e-12]
        if lead.size and lead[0] < 0:
            q[:, j] = -col
    return q


def make_signal(spec: SignalSpec, rng: np.random.Generator) -> SignalFactors:
    """Random signal ``X = U diag(x) V'`` with Haar orthonormal factors."""
    u = _haar_frame(spec.m, spec.rank, rng)
    v = _haar_frame(spec.n, spec.rank, rng)
    x = np.asarray(spec.x, dtype=float)
    return SignalFactors(matrix=(u * x) @ v.T, left=u, values=x, right=v)


def empirical_mse(X: np.ndarray, X_hat: np.ndarray) -> float:
    """Squared Frobenius distance between target and estimate."""
    X = np.asarray(X, dtype=float)
    X_hat = np.asarray(X_hat, dtype=float)
    if X.shape != X_hat.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {X_hat.shape}")
    diff = X_hat - X
    return float(np.sum(diff * diff))


@dataclass(frozen=True)
class ExperimentRecord:
    """One Monte Carlo trial: inputs, empirical observables, theory values."""

    seed: int
    spec: SignalSpec
    mode: ModeDescriptor
    kappa: float
    data_values: tuple[float, ...]  # top rank+1 data singular values
    cos2_left: tuple[float, ...]
    cos2_right: tuple[float, ...]
    mse: dict[str, float]
    theory: dict = field(default_factory=dict)

    def rows(self) -> list[list]:
        """Rows in RECORD_COLUMNS order, one per signal component."""
        out = []
        for i, x in enumerate(self.spec.x):
            out.append(
                [
                    self.seed,
                    x,
                    self.kappa,
                    self.data_values[i],
                    self.cos2_left[i],
                    self.cos2_right[i],
                    self.mse[OPTIMAL_SHRINKER],
                    self.mse[HARD_THRESHOLD],
                    self.mse[TSVD],
                    self.mse[ZERO],
                ]
            )
        return out


def records_to_rows(records: list[ExperimentRecord]) -> list[list]:
    rows = []
    for record in records:
        rows.extend(record.rows())
    return rows


def _mode_kappa(mode: ModeDescriptor) -> float:
    parts = mode.components if mode.kind == "composite" else (mode,)
    for part in parts:
        if part.kind in ("missing_at_random", "outliers_at_random", "corruption_at_random"):
            return part.kappa
    return 1.0


def _run_one_trial(
    index: int, spec: SignalSpec, mode: ModeDescriptor, master_seed: int
) -> ExperimentRecord:
    rng = trial_rng(master_seed, index)
    params = compile_mode(mode, beta=spec.beta)
    signal = make_signal(spec, rng)
    Y = contaminate(signal.matrix, mode, rng)
    fact = svd(Y)
    r = spec.rank

    c2l = tuple(float((signal.left[:, i] @ fact.left[:, i]) ** 2) for i in range(r))
    c2r = tuple(float((signal.right[:, i] @ fact.right[:, i]) ** 2) for i in range(r))

    rules = {
        OPTIMAL_SHRINKER: ShrinkageRule.optimal(params),
        HARD_THRESHOLD: ShrinkageRule.optimal_hard(params),
        TSVD: ShrinkageRule.tsvd(r, params),
        ZERO: ShrinkageRule.zero(params),
    }
    mse = {
        name: empirical_mse(signal.matrix, fact.reconstruct(rule.shrink(fact.values)))
        for name, rule in rules.items()
    }

    x = np.asarray(spec.x)
    theory = {
        "displaced": tuple(float(v) for v in np.atleast_1d(displace(x, params))),
        "cos2_left": tuple(float(v) for v in np.atleast_1d(cos2_left(x, params))),
        "cos2_right": tuple(float(v) for v in np.atleast_1d(cos2_right(x, params))),
        "bulk_edge": bulk_edge(params),
        "lambda_star": optimal_threshold(params),
        "amse_shrinker": total_amse(x, OPTIMAL_SHRINKER, params).total,
        "amse_threshold": total_amse(x, HARD_THRESHOLD, params).total,
        "amse_tsvd": total_amse(x, TSVD, params).total,
    }
    return ExperimentRecord(
        seed=index,
        spec=spec,
        mode=mode,
        kappa=_mode_kappa(mode),
        data_values=tuple(float(v) for v in fact.values[: r + 1]),
        cos2_left=c2l,
        cos2_right=c2r,
        mse=mse,
        theory=theory,
    )


def run_displacement_check(
    spec: SignalSpec,
    mode: ModeDescriptor,
    trials: int,
    master_seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> list[ExperimentRecord]:
    """Observe top singular values, vector cosines and per-rule MSE per trial."""
    indices = range(trials)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(lambda i: _run_one_trial(i, spec, mode, master_seed), indices)
            )
    else:
        records = [_run_one_trial(i, spec, mode, master_seed) for i in indices]
    return records


# ---------------------------------------------------------------------------
# Experiment 1: detectable-count sweep over the missing level
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("kappa", "seed", "detected", "predicted", "lambda_star")


def additive_missing_mode(sigma: float, kappa: float) -> ModeDescriptor:
    if kappa == 1.0:
        return ModeDescriptor.additive_noise(sigma)
    return ModeDescriptor.composite(
        ModeDescriptor.additive_noise(sigma),
        ModeDescriptor.missing_at_random(kappa),
    )


def predicted_kappa_cutoffs(x, sigma: float, beta: float) -> list[float]:
    """Missing levels at which each component stops being threshold-estimable.

    Solving ``x_i = x_critical(optimal threshold)`` for the additive+missing
    family gives ``kappa_i = (sigma * c / x_i)^2`` with ``c`` the breakeven
    signal-to-noise ratio.
    """
    c = breakeven_snr(beta)
    return [float((sigma * c / xi) ** 2) for xi in np.asarray(x, dtype=float)]


def run_critical_sweep(
    x,
    kappa_grid,
    m: int = 1000,
    n: int = 1000,
    sigma: float = 1.0,
    trials: int = 5,
    master_seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> list[dict]:
    """Count data singular values above the compiled optimal threshold per kappa."""
    x = tuple(float(v) for v in x)
    spec = SignalSpec(m=m, n=n, x=x)
    kappas = [float(k) for k in kappa_grid]

    def one(flat: int) -> dict:
        k_idx, t_idx = divmod(flat, trials)
        kappa = kappas[k_idx]
        rng = trial_rng(master_seed, flat)
        mode = additive_missing_mode(sigma, kappa)
        params = compile_mode(mode, beta=spec.beta)
        lam = optimal_threshold(params)
        signal = make_signal(spec, rng)
        Y = contaminate(signal.matrix, mode, rng)
        values = np.linalg.svd(Y, compute_uv=False)
        x_crit = critical_level(HARD_THRESHOLD, params)
        return {
            "kappa": kappa,
            "seed": t_idx,
            "detected": int(np.count_nonzero(values > lam)),
            "predicted": int(sum(1 for xi in x if xi > x_crit)),
            "lambda_star": lam,
        }

    flats = range(len(kappas) * trials)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, flats))
    return [one(flat) for flat in flats]


def detection_transitions(rows: list[dict], levels: list[int]) -> dict[int, float]:
    """Smallest grid kappa at which the median detected count reaches a level."""
    by_kappa: dict[float, list[int]] = {}
    for row in rows:
        by_kappa.setdefault(row["kappa"], []).append(row["detected"])
    out: dict[int, float] = {}
    for level in levels:
        for kappa in sorted(by_kappa):
            if np.median(by_kappa[kappa]) >= level:
                out[level] = kappa
                break
    return out


# ---------------------------------------------------------------------------
# Experiment 2: detection-fraction phase plane over (x, kappa)
# ---------------------------------------------------------------------------

PHASE_COLUMNS = (
    "x",
    "kappa",
    "frac_detect_shrinker",
    "frac_detect_threshold",
    "kappa_crit_shrinker",
    "kappa_crit_threshold",
)


def run_phase_plane(
    x_grid,
    kappa_grid,
    monte: int = 5,
    m: int = 600,
    n: int = 600,
    sigma: float = 1.0,
    master_seed: int = DEFAULT_SEED,
) -> list[dict]:
    """Fraction of trials whose top data value clears each critical level.

    Detection is checked in the data domain: the displaced image of the
    critical signal level of the optimal shrinker is the bulk edge, and that
    of the optimal threshold is the threshold itself.  The overlay columns
    give the theoretical transition kappa for each x.
    """
    xs = [float(v) for v in x_grid]
    kappas = [float(k) for k in kappa_grid]
    beta = m / n
    c = breakeven_snr(beta)
    rows = []
    flat = 0
    for x in xs:
        for kappa in kappas:
            mode = additive_missing_mode(sigma, kappa)
            params = compile_mode(mode, beta=beta)
            edge = bulk_edge(params)
            lam = optimal_threshold(params)
            spec = SignalSpec(m=m, n=n, x=(x,))
            hits_edge = 0
            hits_lam = 0
            for _ in range(monte):
                rng = trial_rng(master_seed, flat)
                flat += 1
                signal = make_signal(spec, rng)
                Y = contaminate(signal.matrix, mode, rng)
                y1 = float(np.linalg.svd(Y, compute_uv=False)[0])
                hits_edge += y1 > edge
                hits_lam += y1 > lam
            rows.append(
                {
                    "x": x,
                    "kappa": kappa,
                    "frac_detect_shrinker": hits_edge / monte,
                    "frac_detect_threshold": hits_lam / monte,
                    "kappa_crit_shrinker": (sigma * beta**0.25 / x) ** 2,
                    "kappa_crit_threshold": (sigma * c / x) ** 2,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Experiment 3: brute-force scan for the best shrinkage coefficient
# ---------------------------------------------------------------------------

BRUTE_COLUMNS = ("x", "seed", "y1", "eta_hat", "eta_star")


def brute_force_shrinker(
    x_grid=None,
    n: int = 250,
    sigma: float = 1.0,
    missing: float = 0.3,
    trials: int = 5,
    eta_max: float = 6.0,
    eta_step: float = 0.005,
    master_seed: int = DEFAULT_SEED,
) -> list[dict]:
    """Scan candidate coefficients for the top data direction, per signal level.

    For each signal level the estimate ``c * u1 v1'`` is evaluated on a fine
    grid of ``c`` and the empirical-MSE minimizer is recorded together with
    the observed top data singular value, giving (y1, eta_hat) pairs to set
    against the closed-form shrinker.  Defaults follow the reference scan:
    250 x 250 matrix, unit additive noise, missing level 0.3, signal levels
    in [0, 6].
    """
    if x_grid is None:
        x_grid = np.linspace(0.0, 6.0, 25)
    xs = [float(v) for v in x_grid]
    if any(v < 0 for v in xs):
        raise ValueError("signal levels must be nonnegative")
    kappa = 1.0 - missing
    mode = additive_missing_mode(sigma, kappa)
    params = compile_mode(mode, beta=1.0)
    candidates = np.arange(0.0, eta_max + eta_step / 2, eta_step)

    rows = []
    flat = 0
    for x in xs:
        for t_idx in range(trials):
            rng = trial_rng(master_seed, flat)
            flat += 1
            if x > 0.0:
                signal = make_signal(SignalSpec(m=n, n=n, x=(x,)), rng)
                X = signal.matrix
            else:
                X = np.zeros((n, n))
            Y = contaminate(X, mode, rng)
            fact = svd(Y)
            y1 = float(fact.values[0])
            outer = np.outer(fact.left[:, 0], fact.right[:, 0])
            best_c = 0.0
            best_mse = math.inf
            for c in candidates:
                mse = empirical_mse(X, c * outer)
                if mse < best_mse:
                    best_mse = mse
                    best_c = float(c)
            rows.append(
                {
                    "x": x,
                    "seed": t_idx,
                    "y1": y1,
                    "eta_hat": best_c,
                    "eta_star": float(optimal_shrinker(y1, params)),
                }
            )
    return rows
