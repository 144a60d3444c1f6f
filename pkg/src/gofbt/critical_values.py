"""Rejection thresholds: the asymptotic AD table and Monte Carlo null laws."""

from __future__ import annotations

import csv
import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from .gof_core import GofStatistic, TestKind, statistic_values

#: Trials are generated in fixed-size blocks, each with its own seeded stream,
#: so the draws depend only on (seed, trial index) and not on worker count.
BLOCK_SIZE = 5000

DEFAULT_TABLE_TRIALS = 100_000
DEFAULT_EXPERIMENT_TRIALS = 10_000
DEFAULT_SEED = 20240101

CACHE_ENV_VAR = "GOFBT_CACHE_DIR"

_AD_TABLE = {
    0.250: 1.248,
    0.150: 1.610,
    0.100: 1.933,
    0.050: 2.492,
    0.010: 3.880,
    0.005: 4.500,
    0.001: 6.000,
}


class Provenance(str, enum.Enum):
    BUILTIN_TABLE1 = "builtin_table1"
    MONTE_CARLO = "monte_carlo"


class Verdict(str, enum.Enum):
    REJECT = "REJECT"
    ACCEPT = "ACCEPT"


@dataclass(frozen=True)
class CriticalTable:
    """Upper-tail percentiles keyed by tail probability."""

    test_kind: TestKind
    entries: Dict[float, float]
    provenance: Provenance
    n: Optional[int] = None

    def __post_init__(self):
        tails = sorted(self.entries, reverse=True)
        values = [self.entries[t] for t in tails]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("percentiles must increase as the tail probability decreases")

    def value(self, tail_probability: float) -> float:
        for tail, val in self.entries.items():
            if np.isclose(tail, tail_probability, rtol=0, atol=1e-12):
                return val
        raise KeyError(f"no entry for tail probability {tail_probability}")

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["test", "n", "provenance"])
            writer.writerow([self.test_kind.value, "" if self.n is None else self.n, self.provenance.value])
            writer.writerow(["tail_prob", "value"])
            for tail in sorted(self.entries, reverse=True):
                writer.writerow([repr(float(tail)), repr(float(self.entries[tail]))])


def builtin_ad_table() -> CriticalTable:
    """Asymptotic upper-tail percentiles of the AD statistic."""
    return CriticalTable(TestKind.AD, dict(_AD_TABLE), Provenance.BUILTIN_TABLE1)


@dataclass(frozen=True)
class NullDistribution:
    test_kind: TestKind
    n: int
    sorted_draws: np.ndarray = field(repr=False)
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials != len(self.sorted_draws):
            raise ValueError("trials must equal the number of draws")

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["test", "n", "trials", "seed"])
            writer.writerow([self.test_kind.value, self.n, self.trials, self.seed])
            for value in self.sorted_draws:
                writer.writerow([repr(float(value))])

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "NullDistribution":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["test", "n", "trials", "seed"]:
                raise ValueError(f"{path}: unexpected header {header}")
            test, n, trials, seed = next(reader)
            draws = np.array([float(row[0]) for row in reader])
        return cls(TestKind.parse(test), int(n), draws, int(trials), int(seed))


def uniform_block(seed: int, block: int, size: int, n: int) -> np.ndarray:
    """Sorted uniform samples of shape ``(size, n)`` for one trial block.

    Exact zeros (the only degenerate value ``Generator.random`` can emit)
    are redrawn from the same stream.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))
    u = rng.random((size, n))
    zeros = u == 0.0
    while zeros.any():
        u[zeros] = rng.random(int(zeros.sum()))
        zeros = u == 0.0
    u.sort(axis=1)
    return u


def _block_statistics(kind: TestKind, n: int, trials: int, seed: int, block: int) -> np.ndarray:
    start = block * BLOCK_SIZE
    size = min(BLOCK_SIZE, trials - start)
    return statistic_values(kind, uniform_block(seed, block, size, n))


def simulate_null(
    test_kind: Union[str, TestKind],
    n: int,
    trials: int = DEFAULT_TABLE_TRIALS,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> NullDistribution:
    """Monte Carlo null distribution of a statistic for sample size ``n``."""
    kind = TestKind.parse(test_kind)
    if n < 1:
        raise ValueError("n must be >= 1")
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    blocks = range((trials + BLOCK_SIZE - 1) // BLOCK_SIZE)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _block_statistics(kind, n, trials, seed, b), blocks))
    else:
        parts = [_block_statistics(kind, n, trials, seed, b) for b in blocks]
    draws = np.sort(np.concatenate(parts))
    draws.setflags(write=False)
    return NullDistribution(kind, n, draws, trials, seed)


def critical_value(dist: NullDistribution, confidence: float) -> float:
    """Empirical ``1 - confidence`` quantile, linear between order statistics."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return float(np.quantile(dist.sorted_draws, 1.0 - confidence))


def monte_carlo_table(dist: NullDistribution, tails: Sequence[float] = tuple(_AD_TABLE)) -> CriticalTable:
    return CriticalTable(
        dist.test_kind,
        {t: critical_value(dist, t) for t in tails},
        Provenance.MONTE_CARLO,
        n=dist.n,
    )


def decide(statistic: Union[GofStatistic, float], threshold: float) -> Verdict:
    """REJECT iff the statistic strictly exceeds the threshold."""
    value = statistic.value if isinstance(statistic, GofStatistic) else float(statistic)
    if not np.isfinite(value):
        raise ValueError("statistic must be finite")
    return Verdict.REJECT if value > threshold else Verdict.ACCEPT


class NullCache:
    """Memoises null distributions in memory and optionally on disk.

    Files are named ``null_<test>_n<n>_t<trials>_s<seed>.csv`` inside
    ``directory``; the directory defaults to ``$GOFBT_CACHE_DIR`` when set.
    """

    def __init__(self, directory: Union[str, Path, None] = None, workers: int = 1):
        if directory is None:
            directory = os.environ.get(CACHE_ENV_VAR) or None
        self.directory = Path(directory) if directory else None
        self.workers = workers
        self._memory: Dict[tuple, NullDistribution] = {}

    def path_for(self, kind: TestKind, n: int, trials: int, seed: int) -> Optional[Path]:
        if self.directory is None:
            return None
        return self.directory / f"null_{kind.value}_n{n}_t{trials}_s{seed}.csv"

    def get(self, test_kind, n: int, trials: int = DEFAULT_TABLE_TRIALS, seed: int = DEFAULT_SEED) -> NullDistribution:
        kind = TestKind.parse(test_kind)
        key = (kind, n, trials, seed)
        if key in self._memory:
            return self._memory[key]
        path = self.path_for(kind, n, trials, seed)
        if path is not None and path.exists():
            dist = NullDistribution.from_csv(path)
        else:
            dist = simulate_null(kind, n, trials, seed, workers=self.workers)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp")
                dist.to_csv(tmp)
                tmp.replace(path)
        self._memory[key] = dist
        return dist

    def threshold(self, test_kind, n: int, confidence: float, trials: int = DEFAULT_TABLE_TRIALS,
                  seed: int = DEFAULT_SEED) -> float:
        return critical_value(self.get(test_kind, n, trials, seed), confidence)

    def thresholds(self, tests: Iterable, n: int, confidence: float, trials: int = DEFAULT_TABLE_TRIALS,
                   seed: int = DEFAULT_SEED) -> Dict[TestKind, float]:
        return {TestKind.parse(t): self.threshold(t, n, confidence, trials, seed) for t in tests}


_default_cache: Optional[NullCache] = None


def default_cache() -> NullCache:
    """Process-wide cache, created lazily so the env var is read at first use."""
    global _default_cache
    if _default_cache is None:
        _default_cache = NullCache()
    return _default_cache
