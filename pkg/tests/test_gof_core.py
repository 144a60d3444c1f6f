import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gofbt.gof_core import (
    DegenerateProbabilityError,
    GofStatistic,
    ProbSample,
    QuadratureError,
    TestKind,
    ad_asym_quadrature,
    ad_asym_statistic,
    ad_statistic,
    cm_statistic,
    compute_statistic,
    ks_statistic,
    pit_map,
    pit_map_many,
    statistic_values,
)

probs = st.floats(min_value=1e-6, max_value=1 - 1e-6, allow_nan=False)
samples = st.lists(probs, min_size=1, max_size=12)


def ad_textbook(u):
    """Loop form of the AD sum, written independently of the kernel."""
    u = sorted(u)
    n = len(u)
    s = 0.0
    for i in range(1, n + 1):
        s += (2 * i - 1) * (math.log(u[i - 1]) + math.log(1 - u[n - i]))
    return -n - s / n


# -- PIT --------------------------------------------------------------------

@pytest.mark.parametrize("realized, expected", [(0.5, 0.2), (2.5, 0.6), (4.0, 0.8)])
def test_pit_map_branches(realized, expected):
    assert pit_map(realized, [1, 2, 3]) == pytest.approx(expected)


def test_pit_map_ties_count_as_not_below():
    assert pit_map(2.0, [1, 2, 3]) == pytest.approx(2 / 5)


def test_pit_map_empty_set():
    with pytest.raises(ValueError, match="empty forecast set"):
        pit_map(1.0, [])


def test_pit_map_many_matches_scalar():
    rng = np.random.default_rng(3)
    fc = rng.normal(size=(7, 50))
    real = rng.normal(size=7)
    expected = [pit_map(r, f) for r, f in zip(real, fc)]
    np.testing.assert_allclose(pit_map_many(real, fc), expected)


@given(st.floats(-1e6, 1e6), st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
def test_pit_map_never_degenerate(realized, forecasts):
    p = pit_map(realized, forecasts)
    assert 0 < p < 1
    ProbSample(np.array([p]))


# -- ProbSample --------------------------------------------------------------

def test_prob_sample_sorts_and_freezes():
    s = ProbSample(np.array([0.7, 0.2]))
    assert list(s.values) == [0.2, 0.7]
    with pytest.raises(ValueError):
        s.values[0] = 0.1


@pytest.mark.parametrize("bad", [[0.0, 0.5], [0.5, 1.0]])
def test_prob_sample_rejects_endpoints(bad):
    with pytest.raises(DegenerateProbabilityError):
        ProbSample(np.array(bad))


@pytest.mark.parametrize("bad", [[], [1.5], [-0.1], [float("nan")]])
def test_prob_sample_rejects_invalid(bad):
    with pytest.raises(ValueError):
        ProbSample(np.array(bad, dtype=float))


def test_test_kind_parse():
    assert TestKind.parse("AD-Asym") is TestKind.AD_ASYM
    assert TestKind.parse("ks") is TestKind.KS
    with pytest.raises(ValueError):
        TestKind.parse("chi2")


# -- AD ------------------------------------------------------------------------

def test_ad_single_point():
    # -1 - (ln 0.5 + ln 0.5)
    assert ad_statistic([0.5]).value == pytest.approx(-1 - 2 * math.log(0.5), abs=1e-12)
    assert ad_statistic([0.5]).value == pytest.approx(0.38629, abs=1e-5)


def test_ad_two_points():
    value = ad_statistic([0.25, 0.75]).value
    assert value == pytest.approx(ad_textbook([0.25, 0.75]), abs=1e-12)
    # quoted to four decimals as 0.2493
    assert value == pytest.approx(0.24930, abs=1e-4)


def test_ad_returns_record():
    stat = ad_statistic([0.3, 0.1, 0.9])
    assert isinstance(stat, GofStatistic)
    assert stat.test_kind is TestKind.AD and stat.n == 3


@settings(max_examples=200, deadline=None)
@given(samples)
def test_ad_matches_textbook_loop(u):
    assert ad_statistic(u).value == pytest.approx(ad_textbook(u), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-3, 1 - 1e-3), min_size=1, max_size=8))
def test_ad_equals_beta1_quadrature(u):
    assert ad_statistic(u).value == pytest.approx(ad_asym_quadrature(u, beta=1.0), abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(samples)
def test_ad_permutation_invariant_and_nonnegative(u):
    a = ad_statistic(u).value
    assert a == pytest.approx(ad_statistic(list(reversed(u))).value, rel=1e-12, abs=1e-12)
    assert a >= -1e-12


# -- AD-Asym -------------------------------------------------------------------

def test_ad_asym_single_point_matches_quadrature():
    assert ad_asym_statistic([0.5]).value == pytest.approx(ad_asym_quadrature([0.5]), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1 - 1e-3), min_size=1, max_size=10))
def test_ad_asym_closed_form_equals_quadrature(u):
    assert ad_asym_statistic(u).value == pytest.approx(ad_asym_quadrature(u, beta=2.0), rel=1e-6)


def test_ad_asym_large_n_matches_quadrature():
    u = np.sort(np.random.default_rng(11).uniform(size=150))
    assert ad_asym_statistic(u).value == pytest.approx(ad_asym_quadrature(u), rel=1e-8)


def test_ad_asym_penalises_outliers_more_than_ad():
    # a point deep in the tail inflates the quartic form more than the quadratic one
    centred = [0.3, 0.45, 0.5, 0.55, 0.7]
    tail = [0.3, 0.45, 0.5, 0.55, 0.9999]
    ratio_ad = ad_statistic(tail).value / ad_statistic(centred).value
    ratio_asym = ad_asym_statistic(tail).value / ad_asym_statistic(centred).value
    assert ratio_asym > ratio_ad > 1


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_quadrature_reports_failure():
    with pytest.raises(QuadratureError) as info:
        ad_asym_quadrature([0.5, 0.6], abs_tol=1e-30, rel_tol=1e-30)
    assert info.value.achieved > 0


def test_quadrature_rejects_small_beta():
    with pytest.raises(ValueError):
        ad_asym_quadrature([0.5], beta=0.5)


# -- KS and CM -----------------------------------------------------------------

def test_ks_examples():
    assert ks_statistic([0.5]).value == pytest.approx(0.5)
    assert ks_statistic([0.25, 0.75]).value == pytest.approx(0.25)
    u = np.arange(1, 10) / 10
    assert ks_statistic(u).value == pytest.approx(0.1)


def test_cm_examples():
    assert cm_statistic([0.5]).value == pytest.approx(1 / 12)
    assert cm_statistic([0.25, 0.75]).value == pytest.approx(1 / 24)


@settings(max_examples=100, deadline=None)
@given(st.lists(probs, min_size=2, max_size=30))
def test_ks_cm_match_scipy(u):
    assert ks_statistic(u).value == pytest.approx(stats.kstest(u, "uniform").statistic, abs=1e-12)
    assert cm_statistic(u).value == pytest.approx(stats.cramervonmises(u, "uniform").statistic, rel=1e-9)


def test_batch_matches_scalar():
    rng = np.random.default_rng(5)
    u = np.sort(rng.uniform(size=(20, 6)), axis=1)
    for kind in TestKind:
        batch = statistic_values(kind, u)
        scalar = [compute_statistic(kind, row).value for row in u]
        np.testing.assert_allclose(batch, scalar, rtol=1e-12)
