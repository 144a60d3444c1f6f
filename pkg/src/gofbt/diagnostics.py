"""Small-sample reliability indicator for the AD measurement."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

from scipy import integrate

DEFAULT_COV_THRESHOLD = 0.10

#: Below this size the normal approximation behind the indicator is poor.
SMALL_SAMPLE_CAVEAT_N = 10

_CAVEAT = (
    "sample size below 10: the indicator relies on a normal approximation "
    "of the empirical CDF that does not hold here; no correction applied"
)


@dataclass(frozen=True)
class CovReport:
    n: int
    cov: float
    warn: bool
    threshold: float
    caveat: Optional[str] = None


def coefficient_of_variation(n: int) -> float:
    """Relative standard deviation ``sqrt(n + 8/3) / (n + 1)`` of the
    empirical-CDF estimator for a sample of size ``n``."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    return math.sqrt(n + 8.0 / 3.0) / (n + 1.0)


def cov_integral_ratio(n: int) -> float:
    """Numerical ratio ``sqrt(I2) / I1`` from the order-statistic covariance.

    ``I2`` is the double integral of ``min(p, q) - p q`` over
    ``[1/n, 1]**2`` and ``I1`` the integral of ``p`` over ``[1/n, 1]``.
    Dividing by ``sqrt(n)`` gives the integral form of the coefficient of
    variation; it is kept as an independent check on
    :func:`coefficient_of_variation`.
    """
    if n < 2:
        raise ValueError("integral form needs n >= 2 (empty domain at n = 1)")
    lo = 1.0 / n
    # split along the diagonal so each half has a smooth integrand
    lower, _ = integrate.dblquad(lambda p, q: p - p * q, lo, 1.0, lo, lambda q: q, epsabs=1e-13, epsrel=1e-12)
    upper, _ = integrate.dblquad(lambda p, q: q - p * q, lo, 1.0, lambda q: q, 1.0, epsabs=1e-13, epsrel=1e-12)
    i2 = lower + upper
    i1, _ = integrate.quad(lambda p: p, lo, 1.0)
    return math.sqrt(i2) / i1


def cov_warning(n: int, threshold: float = DEFAULT_COV_THRESHOLD) -> CovReport:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    cov = coefficient_of_variation(n)
    caveat = _CAVEAT if n < SMALL_SAMPLE_CAVEAT_N else None
    return CovReport(n=n, cov=cov, warn=cov > threshold, threshold=threshold, caveat=caveat)


def cov_curve(n_min: int, n_max: int) -> List[Tuple[int, float]]:
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    return [(n, coefficient_of_variation(n)) for n in range(n_min, n_max + 1)]


def first_n_below(threshold: float = DEFAULT_COV_THRESHOLD) -> int:
    """Smallest ``n`` whose coefficient of variation is at or below ``threshold``."""
    if not 0 < threshold < coefficient_of_variation(1):
        raise ValueError("threshold outside the range of the indicator")
    n = 1
    while coefficient_of_variation(n) > threshold:
        n += 1
    return n


def write_cov_csv(points: List[Tuple[int, float]], path: Union[str, Path], metadata: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        for key, val in (metadata or {}).items():
            fh.write(f"# {key}: {val}\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "cov"])
        for n, cov in points:
            writer.writerow([n, repr(cov)])
