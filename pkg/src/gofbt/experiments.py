"""Monte Carlo rejection-rate studies.

Samples are drawn from an alternative law, mapped through the N(0, 1) CDF
and tested against Monte Carlo thresholds computed at the same sample size.
Draws use common random numbers: for a given (seed, n) the same standard
normal matrix is reused across every Gaussian alternative, so curves over
``sigma`` are smooth and comparisons between tests are paired.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import special

from .backtest import BacktestConfig, BacktestOutcome, run_backtest
from .critical_values import (
    DEFAULT_EXPERIMENT_TRIALS,
    DEFAULT_SEED,
    DEFAULT_TABLE_TRIALS,
    NullCache,
    Verdict,
    default_cache,
)
from .gof_core import TestKind, statistic_values
from .ratesim import (
    DEFAULT_UNITS,
    OuParams,
    RateSeries,
    UnitsConvention,
    bk_variance,
    bk_variance_arrays,
    default_hp_lambda,
    hp_trend,
    theta,
)

ALL_TESTS = (TestKind.AD, TestKind.AD_ASYM, TestKind.CM, TestKind.KS)

_TINY = np.finfo(float).tiny
_ALMOST_ONE = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class Gaussian:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def location(self) -> float:
        return self.mu

    @property
    def shape(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class TStudent:
    nu: float
    unit_variance: bool = True

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("degrees of freedom must be positive")
        if self.unit_variance and self.nu <= 2:
            raise ValueError("variance undefined for nu <= 2")

    @property
    def location(self) -> float:
        return 0.0

    @property
    def shape(self) -> float:
        return self.nu


Alternative = Union[Gaussian, TStudent]


@dataclass(frozen=True)
class ScenarioGrid:
    alternatives: Sequence[Alternative]
    sample_sizes: Sequence[int]
    trials: int = DEFAULT_EXPERIMENT_TRIALS
    confidence: float = 0.05
    tests: Sequence[TestKind] = ALL_TESTS
    seed: int = DEFAULT_SEED
    null_trials: int = DEFAULT_TABLE_TRIALS
    null_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.trials < 1000:
            raise ValueError("trials must be >= 1000")
        if any(n < 2 for n in self.sample_sizes):
            raise ValueError("sample sizes must be >= 2")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        object.__setattr__(self, "tests", tuple(TestKind.parse(t) for t in self.tests))


@dataclass(frozen=True)
class RejectionRow:
    test: TestKind
    n: int
    mu: float
    sigma_or_nu: float
    rejections: int
    trials: int
    seed: int

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.trials


@dataclass
class ExperimentResult:
    rows: List[RejectionRow]
    trials: int
    seed: int

    def rate(self, test, n: int, shape: float, mu: float = 0.0) -> float:
        kind = TestKind.parse(test)
        for row in self.rows:
            if row.test == kind and row.n == n and math.isclose(row.sigma_or_nu, shape) and math.isclose(row.mu, mu):
                return row.rejection_rate
        raise KeyError((kind, n, shape, mu))

    def subset(self, tests=None, sample_sizes=None, mu=None) -> "ExperimentResult":
        kinds = None if tests is None else {TestKind.parse(t) for t in tests}
        rows = [
            r for r in self.rows
            if (kinds is None or r.test in kinds)
            and (sample_sizes is None or r.n in sample_sizes)
            and (mu is None or math.isclose(r.mu, mu))
        ]
        return ExperimentResult(rows, self.trials, self.seed)

    def to_csv(self, path: Union[str, Path], metadata: Optional[dict] = None) -> None:
        with open(path, "w", newline="") as fh:
            _write_metadata(fh, metadata)
            writer = csv.writer(fh)
            writer.writerow(["test", "n", "mu", "sigma_or_nu", "rejection_rate", "trials", "seed"])
            for r in self.rows:
                writer.writerow([r.test.value, r.n, repr(float(r.mu)), repr(float(r.sigma_or_nu)),
                                 repr(r.rejection_rate), r.trials, r.seed])


def _write_metadata(fh, metadata: Optional[dict]) -> None:
    for key, val in (metadata or {}).items():
        fh.write(f"# {key}: {val}\n")


def _standard_normals(seed: int, n: int, trials: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(n,)))
    return rng.standard_normal((trials, n))


def _student_draws(seed: int, n: int, trials: int, alt: TStudent) -> np.ndarray:
    key = (n, 1, int(round(alt.nu * 1_000_000)))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
    draws = rng.standard_t(alt.nu, size=(trials, n))
    if alt.unit_variance:
        draws *= math.sqrt((alt.nu - 2.0) / alt.nu)
    return draws


def normal_pit(x: np.ndarray) -> np.ndarray:
    """Sorted N(0, 1) PIT values of each row.

    The CDF saturates to 0 or 1 in double precision beyond about 8.3
    standard deviations; those values are pulled back to the nearest
    representable probability inside (0, 1).  Any such sample is far in
    the rejection region of every statistic, so verdicts are unaffected.
    """
    u = np.clip(special.ndtr(x), _TINY, _ALMOST_ONE)
    u.sort(axis=-1)
    return u


def _rejections(u: np.ndarray, grid: ScenarioGrid, cache: NullCache) -> Dict[TestKind, int]:
    n = u.shape[-1]
    out = {}
    for kind in grid.tests:
        threshold = cache.threshold(kind, n, grid.confidence, grid.null_trials, grid.null_seed)
        out[kind] = int(np.count_nonzero(statistic_values(kind, u) > threshold))
    return out


def _run_grid(grid: ScenarioGrid, cache: Optional[NullCache]) -> ExperimentResult:
    cache = cache or default_cache()
    rows: List[RejectionRow] = []
    for n in grid.sample_sizes:
        base = None
        for alt in grid.alternatives:
            if isinstance(alt, Gaussian):
                if base is None:
                    base = _standard_normals(grid.seed, n, grid.trials)
                x = alt.mu + alt.sigma * base
            else:
                x = _student_draws(grid.seed, n, grid.trials, alt)
            counts = _rejections(normal_pit(x), grid, cache)
            for kind in grid.tests:
                rows.append(RejectionRow(kind, n, alt.location, alt.shape, counts[kind], grid.trials, grid.seed))
    return ExperimentResult(rows, grid.trials, grid.seed)


def rejection_rate_gaussian(grid: ScenarioGrid, cache: Optional[NullCache] = None) -> ExperimentResult:
    if not all(isinstance(a, Gaussian) for a in grid.alternatives):
        raise ValueError("grid must contain Gaussian alternatives only")
    return _run_grid(grid, cache)


def rejection_rate_tstudent(grid: ScenarioGrid, cache: Optional[NullCache] = None) -> ExperimentResult:
    if not all(isinstance(a, TStudent) for a in grid.alternatives):
        raise ValueError("grid must contain t-Student alternatives only")
    return _run_grid(grid, cache)


# ---------------------------------------------------------------------------
# Fictitious Black-Karasinski backtests
# ---------------------------------------------------------------------------

#: Horizons of the four panels, in years under the default units.
HORIZONS = {"1w": 5 / 250, "1m": 20 / 250, "1y": 1.0, "2y": 2.0}

_TRIAL_BLOCK = 500


@dataclass
class FictitiousResult:
    horizon: float
    horizon_steps: int
    sample_size: int
    delta: np.ndarray
    rejected: Dict[TestKind, np.ndarray]
    thresholds: Dict[TestKind, float]
    trials: int
    seed: int
    dropped: int = 0

    def rejection_rate(self, test) -> float:
        return float(np.mean(self.rejected[TestKind.parse(test)]))

    def binned(self, n_bins: int = 6, central: float = 0.95) -> List[dict]:
        """Rejection rate per equal-width delta bin over the central mass.

        Trials outside the central quantile range are reported in two
        extra rows flagged ``extreme`` and are not part of the binning.
        """
        lo, hi = np.quantile(self.delta, [(1 - central) / 2, (1 + central) / 2])
        edges = np.linspace(lo, hi, n_bins + 1)
        which = np.clip(np.searchsorted(edges, self.delta, side="right") - 1, 0, n_bins - 1)
        inside = (self.delta >= lo) & (self.delta <= hi)
        rows = []

        def row(mask, a, b, extreme):
            count = int(mask.sum())
            entry = {"bin_lo": float(a), "bin_hi": float(b), "count": count, "extreme": extreme}
            for kind, rej in self.rejected.items():
                entry[kind.value] = float(rej[mask].mean()) if count else float("nan")
            return entry

        rows.append(row(self.delta < lo, self.delta.min(), lo, True))
        for j in range(n_bins):
            rows.append(row(inside & (which == j), edges[j], edges[j + 1], False))
        rows.append(row(self.delta > hi, hi, self.delta.max(), True))
        return rows

    def histogram(self, n_bins: int = 30):
        counts, edges = np.histogram(self.delta, bins=n_bins)
        return counts, edges

    def binned_to_csv(self, path: Union[str, Path], n_bins: int = 6, metadata: Optional[dict] = None) -> None:
        rows = self.binned(n_bins)
        kinds = [k.value for k in self.rejected]
        with open(path, "w", newline="") as fh:
            _write_metadata(fh, metadata)
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "count", "extreme"] + kinds + ["horizon", "trials", "seed"])
            for r in rows:
                writer.writerow([repr(r["bin_lo"]), repr(r["bin_hi"]), r["count"], int(r["extreme"])]
                                + [repr(r[k]) for k in kinds] + [repr(self.horizon), self.trials, self.seed])

    def histogram_to_csv(self, path: Union[str, Path], n_bins: int = 30, metadata: Optional[dict] = None) -> None:
        counts, edges = self.histogram(n_bins)
        with open(path, "w", newline="") as fh:
            _write_metadata(fh, metadata)
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "count", "horizon", "trials", "seed"])
            for c, a, b in zip(counts, edges[:-1], edges[1:]):
                writer.writerow([repr(float(a)), repr(float(b)), int(c), repr(self.horizon), self.trials, self.seed])


def fictitious_bk_experiment(
    params: Optional[OuParams] = None,
    horizons: Sequence[float] = (2.0,),
    sample_size: int = 5,
    trials: int = DEFAULT_EXPERIMENT_TRIALS,
    seed: int = DEFAULT_SEED,
    n_scenarios: int = 3000,
    calibration_window: float = 3.0,
    confidence: float = 0.05,
    tests: Sequence[TestKind] = (TestKind.AD, TestKind.AD_ASYM, TestKind.KS),
    units: UnitsConvention = DEFAULT_UNITS,
    detrend: bool = True,
    hp_lambda: Optional[float] = None,
    cache: Optional[NullCache] = None,
    null_trials: int = DEFAULT_TABLE_TRIALS,
    null_seed: int = DEFAULT_SEED,
) -> List[FictitiousResult]:
    """Backtest the model on histories simulated from the model itself.

    Each trial simulates a log-cycle path from ``params`` (stationary
    start) and treats it as a log-rate history.  At ``sample_size``
    non-overlapping forecast dates it runs the backtest pipeline on the
    trailing window: HP detrending (unless ``detrend`` is off), moment
    matching of ``alpha`` and ``sigma`` with ``k`` held at ``params.k``,
    ``n_scenarios`` forecasts to the horizon and the PIT of the realized
    value.  ``delta`` compares the horizon standard deviation of ``exp(y)``
    under ``params`` with the average one under the window calibrations.
    """
    params = params or theta(units)
    if sample_size < 2:
        raise ValueError("sample_size must be >= 2")
    cache = cache or default_cache()
    kinds = tuple(TestKind.parse(t) for t in tests)
    dt = units.dt
    window = units.steps(calibration_window)
    k = params.k
    decay = math.exp(-k * dt)
    step_sd = params.sigma * math.sqrt(-math.expm1(-2 * k * dt) / (2 * k))
    stationary_sd = params.sigma / math.sqrt(2 * k)
    thresholds = cache.thresholds(kinds, sample_size, confidence, null_trials, null_seed)
    lamb = default_hp_lambda(units.obs_per_year) if hp_lambda is None else hp_lambda

    results = []
    for horizon in horizons:
        h = max(1, units.steps(horizon))
        h_years = h * dt
        f_decay = math.exp(-k * h_years)
        f_unit_sd = math.sqrt(-math.expm1(-2 * k * h_years) / (2 * k))
        sd_sim = math.sqrt(bk_variance(params, 1.0, h_years))
        length = window + sample_size * h + 1
        forecast_pos = window + h * np.arange(sample_size)

        deltas, rejected, dropped = [], {kind: [] for kind in kinds}, 0
        for block, start in enumerate(range(0, trials, _TRIAL_BLOCK)):
            size = min(_TRIAL_BLOCK, trials - start)
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(h, block)))
            y = np.empty((size, length))
            y[:, 0] = params.alpha + stationary_sd * rng.standard_normal(size)
            shocks = rng.standard_normal((size, length - 1))
            for i in range(1, length):
                y[:, i] = params.alpha + (y[:, i - 1] - params.alpha) * decay + step_sd * shocks[:, i - 1]

            pits = np.empty((size, sample_size))
            sd_bkt = np.empty((size, sample_size))
            valid = np.ones(size, dtype=bool)
            for j, pos in enumerate(forecast_pos):
                win = y[:, pos - window: pos + 1]
                level = np.zeros(size)
                if detrend:
                    trend = hp_trend(win, lamb)
                    level = trend[:, -1]
                    win = win - trend
                alpha_hat = win[:, 1:].mean(axis=1)
                sq_steps = np.sum(np.diff(win, axis=1) ** 2, axis=1)
                valid &= sq_steps > 0
                sigma_hat = np.sqrt(sq_steps / (window * dt))
                centre = level + alpha_hat + (win[:, -1] - alpha_hat) * f_decay
                spread = sigma_hat * f_unit_sd
                z = rng.standard_normal((size, n_scenarios))
                # compared in log space: exp is monotone so the PIT is unchanged
                scenarios = centre[:, None] + spread[:, None] * z
                below = np.count_nonzero(scenarios < y[:, pos + h][:, None], axis=1)
                pits[:, j] = (below + 1.0) / (n_scenarios + 2.0)
                sd_bkt[:, j] = np.sqrt(bk_variance_arrays(alpha_hat, k, sigma_hat, 1.0, h_years))
            dropped += int((~valid).sum())
            pits = np.sort(pits[valid], axis=1)
            deltas.append(np.log(sd_sim / sd_bkt[valid].mean(axis=1)))
            for kind in kinds:
                rejected[kind].append(statistic_values(kind, pits) > thresholds[kind])

        results.append(FictitiousResult(
            horizon=h_years,
            horizon_steps=h,
            sample_size=sample_size,
            delta=np.concatenate(deltas),
            rejected={kind: np.concatenate(v) for kind, v in rejected.items()},
            thresholds=thresholds,
            trials=trials,
            seed=seed,
            dropped=dropped,
        ))
    return results


# ---------------------------------------------------------------------------
# Volatility sweep on a rate series
# ---------------------------------------------------------------------------

@dataclass
class GammaSweep:
    gammas: List[float]
    outcomes: Dict[float, BacktestOutcome] = field(repr=False)

    def verdict(self, test, gamma: float) -> Verdict:
        return self.outcomes[gamma].verdicts[TestKind.parse(test)]

    def matrix(self) -> Dict[TestKind, List[Verdict]]:
        tests = next(iter(self.outcomes.values())).verdicts.keys()
        return {kind: [self.outcomes[g].verdicts[kind] for g in self.gammas] for kind in tests}

    def to_csv(self, path: Union[str, Path], metadata: Optional[dict] = None) -> None:
        with open(path, "w", newline="") as fh:
            _write_metadata(fh, metadata)
            writer = csv.writer(fh)
            writer.writerow(["test", "gamma", "statistic", "threshold", "verdict"])
            for kind, verdicts in self.matrix().items():
                for g, v in zip(self.gammas, verdicts):
                    out = self.outcomes[g]
                    writer.writerow([kind.value, repr(float(g)), repr(out.statistics[kind].value),
                                     repr(out.thresholds[kind]), v.value])


def empirical_gamma_sweep(
    series: RateSeries,
    gammas: Sequence[float] = (1.0, 2.0, 2.5, 2.75, 3.0),
    config: BacktestConfig = BacktestConfig(),
    cache: Optional[NullCache] = None,
) -> GammaSweep:
    if any(g <= 0 for g in gammas):
        raise ValueError("gammas must be positive")
    outcomes = {float(g): run_backtest(series, replace(config, gamma=float(g)), cache) for g in gammas}
    return GammaSweep([float(g) for g in gammas], outcomes)


def is_monotone_verdicts(verdicts: Sequence[Verdict]) -> bool:
    """True when no ACCEPT is followed by a REJECT."""
    seen_accept = False
    for v in verdicts:
        if v == Verdict.ACCEPT:
            seen_accept = True
        elif seen_accept:
            return False
    return True
