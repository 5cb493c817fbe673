from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jumpreg.core import Dataset, fit_from_splits, loglik_from_rss, predict, profile_fit, weighted_level_score
from jumpreg.errors import DuplicateX, EmptyWindow, InputError, NonIncreasing
from oracles import two_pass_sse

X4 = (0.1, 0.2, 0.3, 0.4)


def test_constant_data_gives_zero_rss():
    data = Dataset(np.linspace(0, 1, 9), np.full(9, 3.25))
    fit = profile_fit(data, [0.3, 0.6])
    assert np.all(fit.levels == 3.25)
    assert fit.rss == 0.0
    assert fit.loglik_max == math.inf


def test_exact_two_step():
    fit = profile_fit(Dataset(X4, (0, 0, 2, 2)), [0.25])
    np.testing.assert_array_equal(fit.levels, [0.0, 2.0])
    assert fit.rss == 0.0


def test_no_breaks_direct_arithmetic():
    fit = profile_fit(Dataset(X4, (0, 1, 2, 3)), [])
    assert fit.levels[0] == 1.5
    assert fit.rss == pytest.approx(5.0, abs=1e-15)
    assert fit.d == 1


def test_observation_on_break_goes_left():
    fit = profile_fit(Dataset(X4, (0, 0, 2, 2)), [0.2])
    assert fit.counts == (2, 2)


def test_empty_window_and_order_errors():
    data = Dataset(X4, (0, 0, 2, 2))
    with pytest.raises(EmptyWindow):
        profile_fit(data, [0.21, 0.22])
    with pytest.raises(NonIncreasing):
        profile_fit(data, [0.3, 0.2])
    with pytest.raises(NonIncreasing):
        profile_fit(data, [0.5])


def test_dataset_validation():
    with pytest.raises(DuplicateX) as exc:
        Dataset.from_arrays([0.1, 0.3, 0.1], [1, 2, 3])
    assert exc.value.value == 0.1
    with pytest.raises(NonIncreasing):
        Dataset([0.2, 0.1], [1, 2])
    with pytest.raises(InputError):
        Dataset([0.1], [1])
    with pytest.raises(InputError):
        Dataset([0.1, 0.2], [1, np.nan])
    d = Dataset.from_arrays([0.3, 0.1, 0.2], [3, 1, 2])
    np.testing.assert_array_equal(d.y, [1, 2, 3])
    with pytest.raises(ValueError):
        d.x[0] = 5.0


def test_weighted_level_score_examples():
    data = Dataset(X4, (0, 0, 2, 2))
    assert weighted_level_score(data, [0.25]) == 8.0
    assert float(data.y @ data.y) == 8.0
    const = Dataset(X4, (1.5,) * 4)
    assert weighted_level_score(const) == 4 * 1.5**2


def test_weighted_level_score_identity_random(rng):
    x = np.sort(rng.uniform(size=15))
    y = rng.normal(size=15)
    data = Dataset(x, y)
    bp = [0.5 * (x[3] + x[4]), 0.5 * (x[9] + x[10])]
    rss = profile_fit(data, bp).rss
    oracle = sum(two_pass_sse(y[a:b]) for a, b in ((0, 4), (4, 10), (10, 15)))
    assert rss == pytest.approx(oracle, rel=1e-12)
    assert float(y @ y) - rss == pytest.approx(weighted_level_score(data, bp), rel=1e-10)


def test_predict_half_open_windows():
    fit = profile_fit(Dataset(X4, (0, 0, 2, 2)), [0.25])
    assert predict(fit, 0.1) == 0.0
    assert predict(fit, 0.25) == 0.0
    assert predict(fit, 0.3) == 2.0
    assert predict(fit, -10.0) == 0.0
    np.testing.assert_array_equal(predict(fit, [0.0, 0.25, 0.26, 9.0]), [0, 0, 2, 2])


def test_fit_from_splits_uses_gap_midpoints():
    data = Dataset(X4, (0, 0, 2, 2))
    fit = fit_from_splits(data, [2])
    assert fit.breakpoints[0] == pytest.approx(0.25)
    assert fit.splits == (2,)
    with pytest.raises(EmptyWindow):
        fit_from_splits(data, [2, 2])


def test_loglik_consistency():
    fit = profile_fit(Dataset(X4, (0, 1, 2, 3)))
    assert fit.sigma0_hat**2 == pytest.approx(fit.rss / fit.n, rel=1e-15)
    assert fit.loglik_max == pytest.approx(-fit.n * math.log(fit.sigma0_hat) - fit.n / 2, rel=1e-14)


series = st.lists(st.floats(-100, 100, allow_nan=False), min_size=6, max_size=30)


@st.composite
def data_and_breaks(draw):
    y = np.array(draw(series))
    n = y.size
    x = np.arange(1, n + 1) / (n + 1)
    ks = sorted(draw(st.sets(st.integers(1, n - 1), max_size=4)))
    bp = [0.5 * (x[k - 1] + x[k]) for k in ks]
    return Dataset(x, y), bp, ks


@given(data_and_breaks(), st.floats(-1, 1))
def test_window_means_minimise_sse(args, eps):
    data, bp, _ = args
    fit = profile_fit(data, bp)
    edges = np.concatenate(([0], np.cumsum(fit.counts)))
    shifted = sum(
        float(((data.y[a:b] - (lvl + eps)) ** 2).sum()) for a, b, lvl in zip(edges[:-1], edges[1:], fit.levels)
    )
    assert fit.rss <= shifted + 1e-9 * max(1.0, shifted)


@given(data_and_breaks())
def test_score_plus_rss_is_total_sum_of_squares(args):
    data, bp, _ = args
    total = float(data.y @ data.y)
    s = weighted_level_score(data, bp) + profile_fit(data, bp).rss
    assert s == pytest.approx(total, rel=1e-9, abs=1e-9)


@given(data_and_breaks(), st.integers(1, 1000))
def test_refining_never_increases_rss(args, pick):
    data, bp, ks = args
    free = [k for k in range(1, data.n) if k not in ks]
    extra = free[pick % len(free)]
    finer = sorted([*ks, extra])
    a = fit_from_splits(data, ks).rss
    b = fit_from_splits(data, finer).rss
    assert b <= a + 1e-9 * max(1.0, a)


@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6), st.integers(2, 10_000))
def test_loglik_strictly_decreasing_in_rss(r1, r2, n):
    lo, hi = sorted((r1, r2))
    if hi > lo * (1 + 1e-12):
        assert loglik_from_rss(lo, n) > loglik_from_rss(hi, n)
