import numpy as np

from gofbt.fixtures import FORECAST_DATES, REALIZED, euribor_like_series, load_euribor_fixture


def test_shipped_csv_matches_generator():
    shipped = load_euribor_fixture()
    regenerated = euribor_like_series()
    np.testing.assert_array_equal(shipped.dates, regenerated.dates)
    np.testing.assert_allclose(shipped.values, regenerated.values, rtol=1e-15)


def test_pins_and_grid():
    s = load_euribor_fixture()
    assert np.all(np.diff(s.dates) == np.timedelta64(7, "D"))
    for date, value in REALIZED.items():
        assert abs(s.values[s.index_of(date)] * 100 - value) < 1e-12
    for d in FORECAST_DATES:
        assert s.index_of(d) + 100 == s.index_of(list(REALIZED)[FORECAST_DATES.index(d)])


def test_other_seed_differs():
    assert not np.array_equal(euribor_like_series(seed=8).values, euribor_like_series().values)
