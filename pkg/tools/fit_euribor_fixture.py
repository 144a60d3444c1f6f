"""Refit the knobs of the synthetic Euribor-shaped fixture and rewrite its CSV.

Two stages:

1. ``search``: find standardized positions ``z`` of the five realized
   values inside the forecast law such that, with backtest seed 0 and 3000
   scenarios, the verdict matrix over gamma in {1, 2, 2.5, 2.75, 3} is
   AD/KS: R R R A A and AD-Asym: R R R R A, with the largest log-margin
   to every threshold.  The search starts from the ``z`` implied by the
   target envelopes.
2. ``fit``: least squares on the level offsets and segment volatility
   scales so that each window calibration yields a log-forecast with mean
   ``log(realized) - z * sd`` and standard deviation matching the target
   min/max spread.

Usage::

    python tools/fit_euribor_fixture.py search
    python tools/fit_euribor_fixture.py fit
    python tools/fit_euribor_fixture.py write [path]
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from gofbt.critical_values import NullCache
from gofbt.fixtures import (
    FIXTURE_SEED,
    FORECAST_DATES,
    HORIZON_STEPS,
    REALIZED,
    WINDOW_STEPS,
    euribor_like_series,
    fixture_dates,
    forecast_positions,
    segment_bounds,
)
from gofbt.gof_core import statistic_values
from gofbt.ratesim import calibrate_moment_matching, default_hp_lambda, hp_filter, ou_mean, ou_variance, path_block_rng

# target forecast envelopes (percent) at the five forecast dates
TARGET_MIN = np.array([2.0609, 1.2958, 2.2502, 1.8545, 0.16382])
TARGET_MAX = np.array([5.5148, 3.7534, 4.9848, 5.357, 4.8442])
# min/max of 3000 normal draws sit about 3.4 sd from the centre
RANGE_IN_SD = 6.8

GAMMAS = (1.0, 2.0, 2.5, 2.75, 3.0)
WANTED = {"ad": (1, 1, 1, 0, 0), "ad_asym": (1, 1, 1, 1, 0), "ks": (1, 1, 1, 0, 0)}
N_SCENARIOS = 3000
SCENARIO_SEED = 0

#: positions used for the shipped fixture; they came from an earlier run of
#: the same random search started from a hand-set ``z`` and reach the same
#: 2.2% worst-case log-margin as ``search()`` does today
Z_TARGET = np.array([-2.70623776, 4.11571509, -1.92911784, -7.696428, -2.93150782])


def target_sd() -> np.ndarray:
    return (np.log(TARGET_MAX) - np.log(TARGET_MIN)) / RANGE_IN_SD


def search(iterations: int = 20_000, rng_seed: int = 0) -> np.ndarray:
    cache = NullCache()
    thresholds = {k: cache.threshold(k, len(FORECAST_DATES), 0.05) for k in WANTED}
    draws = [np.sort(path_block_rng([SCENARIO_SEED, i], 0).standard_normal((1, N_SCENARIOS))[0])
             for i in forecast_positions()]

    def margin(z):
        worst = np.inf
        for gi, g in enumerate(GAMMAS):
            u = np.sort([(np.searchsorted(d, zi / g) + 1) / (N_SCENARIOS + 2) for d, zi in zip(draws, z)])[None, :]
            for kind, want in WANTED.items():
                ratio = math.log(statistic_values(kind, u)[0] / thresholds[kind])
                worst = min(worst, ratio if want[gi] else -ratio)
        return worst

    real = np.log(np.array(list(REALIZED.values())) / 100)
    centre = (np.log(TARGET_MIN) + np.log(TARGET_MAX)) / 2 - math.log(100)
    z0 = (real - centre) / target_sd()
    rng = np.random.default_rng(rng_seed)
    best = (margin(z0), z0)
    for it in range(iterations):
        base, step = (z0, 0.6) if it < iterations // 2 else (best[1], 0.15)
        z = base + rng.normal(0, step, 5)
        m = margin(z)
        if m > best[0]:
            best = (m, z)
    print(f"margin {best[0]:.4f}  z = {best[1].tolist()}")
    return best[1]


def fit(z: np.ndarray = Z_TARGET, seed: int = FIXTURE_SEED):
    positions = forecast_positions()
    n_scales = len(segment_bounds(len(fixture_dates()), positions)) - 1
    sd_t = target_sd()
    mean_t = np.log(np.array(list(REALIZED.values())) / 100) - z * sd_t
    lamb = default_hp_lambda()

    def residuals(x):
        series = euribor_like_series(seed, x[:5], x[5:])
        log_rates = np.log(series.values)
        h = HORIZON_STEPS * series.dt
        out = []
        for pos, m, s in zip(positions, mean_t, sd_t):
            dec = hp_filter(log_rates[pos - WINDOW_STEPS: pos + 1], lamb)
            params = calibrate_moment_matching(dec.cycle, series.dt)
            mean = dec.trend[-1] + ou_mean(params, dec.cycle[-1], h)
            out += [mean - m, 0.3 * (math.sqrt(ou_variance(params, h)) - s) / s]
        # light ridge keeps the scales near one
        return np.array(out + list(0.001 * x[5:]))

    result = least_squares(residuals, np.zeros(5 + n_scales))
    print("level offsets:", result.x[:5].tolist())
    print("log vol scales:", result.x[5:].tolist())
    print("residuals:", np.round(residuals(result.x)[:10], 4).tolist())
    return result.x


def write(path: Path) -> None:
    series = euribor_like_series()
    series.to_csv(path, {
        "description": "synthetic Euribor-6M-shaped weekly series (decimal rates); see gofbt.fixtures",
        "seed": FIXTURE_SEED,
    })
    print(f"wrote {len(series)} rows to {path}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("stage", choices=["search", "fit", "write"])
    parser.add_argument("path", nargs="?", default=str(
        Path(__file__).resolve().parents[1] / "src" / "gofbt" / "data" / "euribor6m_synthetic.csv"))
    args = parser.parse_args(argv)
    if args.stage == "search":
        search()
    elif args.stage == "fit":
        fit()
    else:
        write(Path(args.path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
