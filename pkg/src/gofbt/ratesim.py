"""Rate time-series machinery.

Log-rates are split by a Hodrick-Prescott filter into a smooth trend and a
cycle; the cycle follows an Ornstein-Uhlenbeck process

    dy = k (alpha - y) dt + sigma dW

so that the simulated rate ``exp(trend + y)`` stays positive (the
Black-Karasinski form).  Time is measured in years: a series sampled every
``step_trading_days`` trading days out of ``trading_days_per_year`` has
``dt = step_trading_days / trading_days_per_year``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg

PATH_BLOCK = 10_000


@dataclass(frozen=True)
class UnitsConvention:
    trading_days_per_year: float = 250.0
    step_trading_days: float = 5.0

    @property
    def dt(self) -> float:
        return self.step_trading_days / self.trading_days_per_year

    @property
    def obs_per_year(self) -> float:
        return self.trading_days_per_year / self.step_trading_days

    def steps(self, years: float) -> int:
        return int(round(years / self.dt))

    def describe(self) -> str:
        return f"dt={self.dt!r} years ({self.step_trading_days:g} trading days of {self.trading_days_per_year:g}/year)"


DEFAULT_UNITS = UnitsConvention()


@dataclass(frozen=True)
class OuParams:
    alpha: float
    k: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.k) and math.isfinite(self.sigma)):
            raise ValueError("OU parameters must be finite")
        if self.k <= 0:
            raise ValueError("mean-reversion speed k must be positive")
        if self.sigma <= 0:
            raise ValueError("volatility sigma must be positive")

    def per_step(self, dt: float) -> "OuParams":
        """Express annual parameters in units of one sampling step."""
        return OuParams(self.alpha, self.k * dt, self.sigma * math.sqrt(dt))

    @classmethod
    def from_per_step(cls, params: "OuParams", dt: float) -> "OuParams":
        return cls(params.alpha, params.k / dt, params.sigma / math.sqrt(dt))


#: Log-cycle parameters estimated on 5-day Euribor 6M data, in per-step units.
THETA_PER_STEP = OuParams(alpha=-0.0004871, k=0.011853, sigma=0.018855)


def theta(units: UnitsConvention = DEFAULT_UNITS) -> OuParams:
    """The reference parameters converted to annual units."""
    return OuParams.from_per_step(THETA_PER_STEP, units.dt)


# ---------------------------------------------------------------------------
# Series I/O
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateSeries:
    dates: np.ndarray
    values: np.ndarray
    units: UnitsConvention = field(default=DEFAULT_UNITS)

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.shape != values.shape or dates.ndim != 1:
            raise ValueError("dates and values must be 1-d arrays of equal length")
        if len(values) < 2:
            raise ValueError("a rate series needs at least two observations")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise ValueError("dates must be strictly ascending")
        if not np.all(np.isfinite(values)):
            raise ValueError("rates must be finite")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @property
    def dt(self) -> float:
        return self.units.dt

    def __len__(self) -> int:
        return len(self.values)

    def index_of(self, date) -> int:
        """Position of ``date`` in the series; raises ``KeyError`` if absent."""
        target = np.datetime64(date, "D")
        pos = int(np.searchsorted(self.dates, target))
        if pos >= len(self.dates) or self.dates[pos] != target:
            raise KeyError(f"date {target} not in series")
        return pos

    @classmethod
    def from_csv(cls, path: Union[str, Path], units: UnitsConvention = DEFAULT_UNITS) -> "RateSeries":
        dates, values = [], []
        header = None
        with open(path, newline="") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.startswith("#") or not line.strip():
                    continue
                row = [cell.strip() for cell in next(csv.reader([line]))]
                if header is None:
                    header = row
                    if header[:2] != ["date", "rate"]:
                        raise ValueError(f"{path}: line {lineno}: expected header 'date,rate', got {header}")
                    continue
                try:
                    if len(row) != len(header):
                        raise ValueError("wrong number of fields")
                    dates.append(np.datetime64(row[0], "D"))
                    values.append(float(row[1]))
                except ValueError as exc:
                    raise ValueError(f"{path}: line {lineno}: malformed row {row}") from exc
        if header is None:
            raise ValueError(f"{path}: empty file")
        return cls(np.array(dates), np.array(values), units)

    def to_csv(self, path: Union[str, Path], metadata: Optional[dict] = None) -> None:
        with open(path, "w", newline="") as fh:
            for key, val in (metadata or {}).items():
                fh.write(f"# {key}: {val}\n")
            writer = csv.writer(fh)
            writer.writerow(["date", "rate"])
            for d, v in zip(self.dates, self.values):
                writer.writerow([str(d), repr(float(v))])


# ---------------------------------------------------------------------------
# Hodrick-Prescott filter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HpDecomposition:
    trend: np.ndarray
    cycle: np.ndarray
    lamb: float


def default_hp_lambda(obs_per_year: float = DEFAULT_UNITS.obs_per_year) -> float:
    """1600 for quarterly data, scaled by the fourth power of the sampling
    frequency relative to quarterly."""
    return 1600.0 * (obs_per_year / 4.0) ** 4


def hp_filter(series: Union[RateSeries, Sequence[float], np.ndarray], lamb: Optional[float] = None) -> HpDecomposition:
    """Hodrick-Prescott trend/cycle split.

    Solves ``(I + lamb * D'D) trend = y`` where ``D`` takes second
    differences; the system is symmetric positive definite and pentadiagonal.
    """
    if isinstance(series, RateSeries):
        y = series.values
        if lamb is None:
            lamb = default_hp_lambda(series.units.obs_per_year)
    else:
        y = np.asarray(series, dtype=float)
    if lamb is None:
        lamb = default_hp_lambda()
    n = y.size
    if n < 3:
        raise ValueError("HP filter needs at least three observations")
    if lamb <= 0:
        raise ValueError("lambda must be positive")

    trend = hp_trend(y, lamb)
    return HpDecomposition(trend=trend, cycle=y - trend, lamb=float(lamb))


def hp_trend(y: np.ndarray, lamb: float) -> np.ndarray:
    """HP trend along the last axis; 2-D input filters every row at once."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    # upper banded storage of I + lamb * D'D (bandwidth 2)
    d0 = np.full(n, 6.0)
    d0[[0, -1]] = 1.0
    d0[[1, -2]] = 5.0
    d1 = np.full(n - 1, -4.0)
    d1[[0, -1]] = -2.0
    if n == 3:
        d0 = np.array([1.0, 4.0, 1.0])
        d1 = np.array([-2.0, -2.0])
    d2 = np.ones(n - 2)
    ab = np.zeros((3, n))
    ab[0, 2:] = lamb * d2
    ab[1, 1:] = lamb * d1
    ab[2, :] = 1.0 + lamb * d0
    return linalg.solveh_banded(ab, y.T).T


# ---------------------------------------------------------------------------
# OU calibration and simulation
# ---------------------------------------------------------------------------

def calibrate_moment_matching(y: Sequence[float], dt: float, k: Optional[float] = None) -> OuParams:
    """Two-step moment matching on observations ``y_0, ..., y_n``.

    ``alpha`` is the mean of ``y_1..y_n``; the per-step speed is
    ``sum(dy**2) / (2 sum((y - alpha)**2))`` and is divided by ``dt``;
    ``sigma**2 = sum(dy**2) / (n dt)``.  Passing ``k`` freezes the speed and
    estimates only ``alpha`` and ``sigma``.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        raise ValueError("calibration needs at least three observations")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = y.size - 1
    alpha = float(np.mean(y[1:]))
    sq_steps = float(np.sum(np.diff(y) ** 2))
    sq_dev = float(np.sum((y[1:] - alpha) ** 2))
    if sq_dev == 0.0 or sq_steps == 0.0:
        raise ValueError("degenerate series: k undefined")
    if k is None:
        k = sq_steps / (2.0 * sq_dev) / dt
    sigma = math.sqrt(sq_steps / (n * dt))
    return OuParams(alpha=alpha, k=float(k), sigma=sigma)


def ou_transition(params: OuParams, dt: float):
    """Return ``(decay, noise_sd)`` of the exact one-step update."""
    decay = math.exp(-params.k * dt)
    noise_sd = params.sigma * math.sqrt(-math.expm1(-2.0 * params.k * dt) / (2.0 * params.k))
    return decay, noise_sd


def ou_mean(params: OuParams, y0, t: float):
    return params.alpha + (np.asarray(y0, dtype=float) - params.alpha) * math.exp(-params.k * t)


def ou_variance(params: OuParams, t: float) -> float:
    return params.sigma**2 * -math.expm1(-2.0 * params.k * t) / (2.0 * params.k)


def path_block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))


def simulate_ou(
    params: OuParams,
    y0: Union[float, np.ndarray],
    dt: float,
    steps: int,
    n_paths: int,
    seed: int,
    terminal_only: bool = False,
) -> np.ndarray:
    """Exact-discretisation OU paths.

    Returns shape ``(n_paths, steps + 1)`` with the starting value in column
    0, or shape ``(n_paths,)`` holding the final values when
    ``terminal_only`` is set.  Paths are generated in blocks of
    :data:`PATH_BLOCK`, each from its own seeded stream, so a given
    (seed, path, step) always sees the same normal draw.
    """
    if dt <= 0 or steps < 1 or n_paths < 1:
        raise ValueError("need dt > 0, steps >= 1 and n_paths >= 1")
    decay, noise_sd = ou_transition(params, dt)
    start = np.broadcast_to(np.asarray(y0, dtype=float), (n_paths,))
    out = np.empty(n_paths) if terminal_only else np.empty((n_paths, steps + 1))
    for block, lo in enumerate(range(0, n_paths, PATH_BLOCK)):
        hi = min(lo + PATH_BLOCK, n_paths)
        rng = path_block_rng(seed, block)
        shocks = rng.standard_normal((steps, hi - lo))
        y = start[lo:hi].copy()
        if not terminal_only:
            out[lo:hi, 0] = y
        for step in range(steps):
            y = params.alpha + (y - params.alpha) * decay + noise_sd * shocks[step]
            if not terminal_only:
                out[lo:hi, step + 1] = y
        if terminal_only:
            out[lo:hi] = y
    return out


def bk_variance(params: OuParams, x0, t):
    """Variance of ``X_t = exp(y_t)`` given ``X_0 = x0``.

    Uses ``E[X_t**2] - E[X_t]**2`` with both moments of the log-normal law;
    ``x0`` and ``t`` may be arrays.
    """
    var = bk_variance_arrays(params.alpha, params.k, params.sigma, x0, t)
    return float(var) if var.ndim == 0 else var


def bk_variance_arrays(alpha, k, sigma, x0, t) -> np.ndarray:
    """Broadcasting form of :func:`bk_variance` over parameter arrays."""
    alpha, k, sigma, x0, t = (np.asarray(v, dtype=float) for v in (alpha, k, sigma, x0, t))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if np.any(x0 <= 0):
        raise ValueError("x0 must be positive")
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    decay = np.exp(-k * t)
    spread = -np.expm1(-2.0 * k * t)
    base = np.log(x0) * decay + alpha * (1.0 - decay)
    first = np.exp(base + sigma**2 / (4.0 * k) * spread)
    # second - first**2 rewritten to avoid cancellation when the spread is small
    return first**2 * np.expm1(sigma**2 / (2.0 * k) * spread)


def volatility_adjust(params: OuParams, gamma: float) -> OuParams:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return replace(params, sigma=params.sigma * gamma)


def compose_rate(cycle_paths: np.ndarray, trend_value: float) -> np.ndarray:
    """Rates from simulated log-cycles and the frozen log-trend level."""
    if not math.isfinite(trend_value):
        raise ValueError("trend value must be finite")
    return np.exp(trend_value + np.asarray(cycle_paths, dtype=float))
