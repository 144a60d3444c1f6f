"""Goodness-of-fit statistics on probability-integral-transform samples.

Every statistic here takes a sample of PIT values ``u`` (probabilities in
the open interval (0, 1)) and measures its distance from the uniform law.
The scalar entry points (:func:`ad_statistic`, :func:`ks_statistic`, ...)
validate their input and return a :class:`GofStatistic`.  The batch entry
point :func:`statistic_values` skips validation and works on arrays of
shape ``(..., n)`` whose last axis is already sorted; it is what the Monte
Carlo code uses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy import integrate


class TestKind(str, enum.Enum):
    """Statistics supported by the toolkit."""

    AD = "ad"
    AD_ASYM = "ad_asym"
    KS = "ks"
    CM = "cm"

    # keep pytest from collecting this enum as a test class
    __test__ = False

    @classmethod
    def parse(cls, value: Union[str, "TestKind"]) -> "TestKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown test kind {value!r}; expected one of {[k.value for k in cls]}")


class DegenerateProbabilityError(ValueError):
    """A PIT value sits exactly on 0 or 1, where the log terms diverge."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class ProbSample:
    """Sorted PIT values ``0 < u_1 <= ... <= u_n < 1``."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a probability sample needs at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probability sample contains non-finite values")
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("probabilities must lie in (0, 1)")
        if np.any((arr == 0.0) | (arr == 1.0)):
            raise DegenerateProbabilityError("degenerate probability: values of exactly 0 or 1 are not allowed")
        arr = np.sort(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @classmethod
    def coerce(cls, u: Union["ProbSample", Iterable[float], np.ndarray]) -> "ProbSample":
        return u if isinstance(u, cls) else cls(np.asarray(list(u) if not isinstance(u, np.ndarray) else u))


@dataclass(frozen=True)
class GofStatistic:
    test_kind: TestKind
    value: float
    n: int


SampleLike = Union[ProbSample, Iterable[float], np.ndarray]


# ---------------------------------------------------------------------------
# PIT mapping
# ---------------------------------------------------------------------------

def pit_map(realized: float, forecasts: Iterable[float]) -> float:
    """Map a realization to its rank-based p-value within a forecast set.

    With ``N`` scenarios and ``i`` of them strictly below ``realized`` the
    result is ``(i + 1) / (N + 2)``, so it ranges over
    ``1/(N+2), ..., (N+1)/(N+2)`` and never touches 0 or 1.  A realization
    equal to a scenario is not counted as above it.
    """
    scenarios = np.asarray(forecasts, dtype=float).ravel()
    if scenarios.size == 0:
        raise ValueError("empty forecast set")
    if not math.isfinite(realized) or not np.all(np.isfinite(scenarios)):
        raise ValueError("realized value and forecasts must be finite")
    below = int(np.count_nonzero(scenarios < realized))
    return (below + 1) / (scenarios.size + 2)


def pit_map_many(realized: np.ndarray, forecasts: np.ndarray) -> np.ndarray:
    """Row-wise :func:`pit_map`; ``forecasts`` has shape ``(m, N)``."""
    forecasts = np.asarray(forecasts, dtype=float)
    realized = np.asarray(realized, dtype=float)
    if forecasts.ndim != 2 or forecasts.shape[1] == 0:
        raise ValueError("empty forecast set")
    below = np.count_nonzero(forecasts < realized[:, None], axis=1)
    return (below + 1.0) / (forecasts.shape[1] + 2.0)


# ---------------------------------------------------------------------------
# Vectorised kernels (sorted last axis, no validation)
# ---------------------------------------------------------------------------

def _ad_values(u: np.ndarray) -> np.ndarray:
    n = u.shape[-1]
    weights = (2.0 * np.arange(1, n + 1) - 1.0) / n
    logs = np.log(u) + np.log1p(-u[..., ::-1])
    return -n - np.sum(weights * logs, axis=-1)


def _ad_asym_coefficients(n: int):
    k = np.arange(1, n, dtype=float)
    nf = float(n)
    n4 = nf**4
    a1 = (4 * k**3 - 6 * k**2 + 4 * k - 1) / n4
    a2 = 2 * (6 * nf * k**2 - 6 * nf * k + 2 * nf - 4 * k**3 + 6 * k**2 - 4 * k + 1) / n4
    a3 = -(-((k - nf) ** 4) + (nf - k + 1) ** 4) / n4
    a4 = 2 * (2 * nf**3 - 6 * nf * k**2 + 6 * nf * k - 2 * nf + 4 * k**3 - 6 * k**2 + 4 * k - 1) / n4
    return a1, a2, a3, a4


def _ad_asym_values(u: np.ndarray) -> np.ndarray:
    n = u.shape[-1]
    un = u[..., -1]
    c = (n - 1) / n
    log_un = np.log(un)
    log_1mun = np.log1p(-un)
    gamma = (
        un
        - (c - 1.0) ** 4 / (un - 1.0)
        - (c - 1.0) ** 3 * (2.0 + 2.0 * c) * log_1mun
        + (-4.0 + 2.0 * c) * (n - 1) ** 3 * log_un / n**3
        - (n - 1) ** 4 / (n**4 * un)
        - 1.0
    )
    total = gamma
    if n > 1:
        a1, a2, a3, a4 = _ad_asym_coefficients(n)
        uk = u[..., :-1]
        total = total + np.sum(a1 / uk + a2 * np.log(uk) + a3 / (uk - 1.0) + a4 * np.log1p(-uk), axis=-1)
    # segment (u_n, 1) where the empirical CDF equals one
    terminal = 1.0 / un + 2.0 * log_un - un
    return n * n * (total + terminal)


def _ks_values(u: np.ndarray) -> np.ndarray:
    n = u.shape[-1]
    k = np.arange(1, n + 1)
    return np.max(np.maximum(k / n - u, u - (k - 1) / n), axis=-1)


def _cm_values(u: np.ndarray) -> np.ndarray:
    n = u.shape[-1]
    mid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    return 1.0 / (12.0 * n) + np.sum((u - mid) ** 2, axis=-1)


_KERNELS = {
    TestKind.AD: _ad_values,
    TestKind.AD_ASYM: _ad_asym_values,
    TestKind.KS: _ks_values,
    TestKind.CM: _cm_values,
}


def statistic_values(kind: Union[str, TestKind], u_sorted: np.ndarray) -> np.ndarray:
    """Evaluate a statistic over a batch of sorted samples (last axis)."""
    return _KERNELS[TestKind.parse(kind)](np.asarray(u_sorted, dtype=float))


# ---------------------------------------------------------------------------
# Scalar entry points
# ---------------------------------------------------------------------------

def _scalar(kind: TestKind, u: SampleLike) -> GofStatistic:
    sample = ProbSample.coerce(u)
    value = float(_KERNELS[kind](sample.values))
    return GofStatistic(kind, value, sample.n)


def ad_statistic(u: SampleLike) -> GofStatistic:
    r"""Anderson-Darling statistic.

    .. math::
        W^2 = -n - \sum_{k=1}^n \frac{2k-1}{n}
              \left[\ln u_k + \ln(1 - u_{n+1-k})\right]
    """
    return _scalar(TestKind.AD, u)


def ad_asym_statistic(u: SampleLike) -> GofStatistic:
    """Asymmetric Anderson-Darling statistic (exponent 2) in closed form.

    Integrates ``(F_n(u) - u)**4 / (u (1 - u) / n)**2`` over (0, 1).  The
    part over ``(0, u_n)`` is the sum of a boundary constant and per-point
    coefficients ``a1(k)/u_k + a2(k) log u_k + a3(k)/(u_k - 1)
    + a4(k) log(1 - u_k)`` for ``k < n``; the part over ``(u_n, 1)`` equals
    ``1/u_n + 2 log u_n - u_n``.  Both are scaled by ``n**2``.
    """
    return _scalar(TestKind.AD_ASYM, u)


def ks_statistic(u: SampleLike) -> GofStatistic:
    """Two-sided Kolmogorov-Smirnov distance from the uniform CDF."""
    return _scalar(TestKind.KS, u)


def cm_statistic(u: SampleLike) -> GofStatistic:
    """Cramer-von Mises statistic ``1/(12n) + sum (u_k - (2k-1)/(2n))**2``."""
    return _scalar(TestKind.CM, u)


def compute_statistic(kind: Union[str, TestKind], u: SampleLike) -> GofStatistic:
    return _scalar(TestKind.parse(kind), u)


def ad_asym_quadrature(
    u: SampleLike,
    beta: float = 2.0,
    abs_tol: float = 1e-9,
    rel_tol: float = 1e-11,
) -> float:
    """Numerically integrate the generalised AD functional.

    Computes the sum over segments ``(u_{k-1}, u_k)`` (with ``u_0 = 0`` and a
    last segment ``(u_n, 1)``) of the integral of
    ``(u - c_k)**(2 beta) / (u (1 - u) / n)**beta`` where ``c_k`` is the
    empirical CDF level on that segment.  ``beta = 1`` reproduces
    :func:`ad_statistic`; ``beta = 2`` reproduces :func:`ad_asym_statistic`.

    Raises :class:`QuadratureError` when the reported error exceeds
    ``max(abs_tol, rel_tol * |result|)``.
    """
    if beta < 1.0:
        raise ValueError("beta must be >= 1")
    sample = ProbSample.coerce(u)
    n = sample.n
    edges = np.concatenate(([0.0], sample.values, [1.0]))
    scale = float(n) ** beta

    total = 0.0
    error = 0.0
    for k in range(n + 1):
        lo, hi = edges[k], edges[k + 1]
        if hi <= lo:
            continue
        level = k / n

        def integrand(x, level=level):
            return scale * (x - level) ** (2 * beta) / (x * (1.0 - x)) ** beta

        value, err = integrate.quad(integrand, lo, hi, epsabs=abs_tol / (n + 1), epsrel=rel_tol, limit=500)
        total += value
        error += err

    if not math.isfinite(total) or error > max(abs_tol, rel_tol * abs(total)):
        raise QuadratureError(
            f"quadrature did not converge: achieved error {error:.3e} (requested {abs_tol:.1e})",
            achieved=error,
        )
    return total
