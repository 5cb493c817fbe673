from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jumpreg.core import Dataset
from jumpreg.errors import BadIncumbent, BadParam, IndexOrder, Infeasible, TooLarge
from jumpreg.segmentation import (
    PrefixSums,
    SegConfig,
    brute_force,
    dp_optimal,
    dp_pruned,
    greedy_init,
    segment_cost,
)
from oracles import enumerate_partitions, partition_sse, two_pass_sse


def make(y):
    y = np.asarray(y, dtype=np.float64)
    return Dataset(np.arange(1, y.size + 1) / (y.size + 1), y)


def test_prefix_sums_recompute(rng):
    y = rng.normal(size=20)
    ps = PrefixSums.from_values(y)
    assert ps.n == 20
    assert ps.cum_y[0] == 0.0 and ps.cum_y2[0] == 0.0
    np.testing.assert_allclose(ps.cum_y[1:], np.cumsum(y), rtol=1e-14)
    np.testing.assert_allclose(ps.cum_y2[1:], np.cumsum(y * y), rtol=1e-14)


def test_compensated_prefix_sums_for_large_n(rng):
    y = 1e6 + rng.normal(size=200_001)
    ps = PrefixSums.from_values(y)
    assert ps.cum_y[-1] == pytest.approx(math.fsum(y), rel=1e-15)


def test_segment_cost_examples(rng):
    ps = PrefixSums.from_values([0.0, 2.0, 5.0])
    assert segment_cost(ps, 2, 2) == 0.0
    assert segment_cost(ps, 1, 2) == 2.0
    with pytest.raises(IndexOrder):
        segment_cost(ps, 3, 2)
    y = rng.normal(3.0, 2.0, size=12)
    ps = PrefixSums.from_values(y)
    assert segment_cost(ps, 1, 12) == pytest.approx(two_pass_sse(y), rel=1e-9)
    assert segment_cost(ps, 4, 9) == pytest.approx(two_pass_sse(y[3:9]), rel=1e-9)


def test_dp_perfect_separation():
    fit = dp_optimal(make([1, 1, 1, 5, 5, 5]), SegConfig(2, 1))
    assert fit.splits == (3,)
    np.testing.assert_array_equal(fit.levels, [1.0, 5.0])
    assert fit.rss == 0.0


def test_dp_single_window(rng):
    data = make(rng.normal(size=9))
    fit = dp_optimal(data, SegConfig(1))
    assert fit.breakpoints.size == 0
    assert fit.levels[0] == pytest.approx(data.y.mean())


def test_infeasible_config():
    with pytest.raises(Infeasible):
        dp_optimal(make(np.zeros(5)), SegConfig(3, 2))
    with pytest.raises(BadParam):
        SegConfig(0)


def test_brute_force_guard():
    with pytest.raises(TooLarge):
        brute_force(make(np.zeros(200)), SegConfig(5, 1))


def test_brute_force_against_every_alternative(rng):
    y = rng.normal(size=10)
    fit = brute_force(make(y), SegConfig(3, 2))
    costs = [partition_sse(y, c) for c in enumerate_partitions(10, 3, 2)]
    assert fit.rss <= min(costs) * (1 + 1e-12)


def test_brute_force_matches_dp_n20(rng):
    data = make(rng.normal(size=20))
    a = brute_force(data, SegConfig(2))
    b = dp_optimal(data, SegConfig(2))
    assert a.splits == b.splits and a.rss == b.rss


def test_pruned_with_infinite_incumbent_matches_full(rng):
    data = make(rng.normal(size=40) + np.repeat([0, 2, -1, 1], 10))
    full, s_full = dp_optimal(data, SegConfig(4), return_stats=True)
    pr, s_pr = dp_pruned(data, SegConfig(4, prune=True, incumbent_rss=math.inf))
    assert pr.splits == full.splits
    assert s_pr.evaluations == s_full.evaluations
    assert s_pr.skipped == 0


def test_pruned_with_oracle_incumbent(rng):
    data = make(rng.normal(size=60) + np.repeat([0, 3, 1], 20))
    full, s_full = dp_optimal(data, SegConfig(3), return_stats=True)
    pr, s_pr = dp_pruned(data, SegConfig(3, prune=True, incumbent_rss=s_full.objective))
    assert pr.splits == full.splits and pr.rss == full.rss
    assert s_pr.skipped > 0
    assert s_pr.evaluations < s_full.evaluations
    assert s_pr.total == s_full.evaluations


def test_incumbent_below_optimum_is_rejected(rng):
    data = make(rng.normal(size=30))
    _, s = dp_optimal(data, SegConfig(3), return_stats=True)
    with pytest.raises(BadIncumbent):
        dp_pruned(data, SegConfig(3, prune=True, incumbent_rss=0.5 * s.objective))


def test_evaluation_count_is_quadratic():
    # with no pruning every admissible (window, start) pair is costed once
    n, d, L = 50, 4, 2
    _, s = dp_optimal(make(np.sin(np.arange(n))), SegConfig(d, L), return_stats=True)
    expected = n - L + 1 - (d - 1) * L
    for j in range(2, d + 1):
        for k in range((d - j + 1) * L, n - (j - 1) * L + 1):
            hi = min(k - L, 0) if j == d else k - L
            expected += max(0, hi - (d - j) * L + 1)
    assert s.evaluations == expected
    assert s.evaluations <= n * n * d


def test_greedy_exact_blocks():
    y = np.repeat([0.0, 4.0, -2.0, 3.0], [5, 7, 4, 6])
    splits, rss = greedy_init(make(y), 4)
    assert splits == dp_optimal(make(y), SegConfig(4)).splits
    assert rss == pytest.approx(0.0, abs=1e-12)


def test_greedy_rejects_single_window():
    with pytest.raises(BadParam):
        greedy_init(make(np.zeros(6)), 1)


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=40))
def test_greedy_equals_dp_for_two_windows(vals):
    data = make(vals)
    splits, obj = greedy_init(data, 2)
    fit, stats = dp_optimal(data, SegConfig(2), return_stats=True)
    assert obj == stats.objective
    assert splits == fit.splits


@st.composite
def instances(draw):
    n = draw(st.integers(4, 30))
    L = draw(st.integers(1, 3))
    d = draw(st.integers(1, min(4, n // L)))
    y = draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=n, max_size=n))
    if draw(st.booleans()):
        # rounding creates ties between placements
        y = [round(v) for v in y]
    return make(y), SegConfig(d, L)


@given(instances())
def test_dp_and_pruned_equal_brute_force(inst):
    data, cfg = inst
    ref = brute_force(data, cfg)
    full, s = dp_optimal(data, cfg, return_stats=True)
    assert full.splits == ref.splits and full.rss == ref.rss
    if cfg.d >= 2:
        _, inc = greedy_init(data, cfg.d, cfg.min_seg_len)
        assert inc >= s.objective
        pr, _ = dp_pruned(data, SegConfig(cfg.d, cfg.min_seg_len, True, inc))
        assert pr.splits == ref.splits and pr.rss == ref.rss


@given(instances())
def test_rss_non_increasing_in_d(inst):
    data, cfg = inst
    rss = [dp_optimal(data, SegConfig(d, cfg.min_seg_len)).rss for d in range(1, cfg.d + 1)]
    assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(rss, rss[1:]))


@given(instances())
def test_repeat_runs_identical(inst):
    data, cfg = inst
    assert dp_optimal(data, cfg).splits == dp_optimal(data, cfg).splits
