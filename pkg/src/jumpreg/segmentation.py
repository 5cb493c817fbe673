"""Optimal placement of break points by least squares.

All routines minimise the total within-window sum of squares over split
indices, subject to a minimum window length.  The dynamic program works on
suffixes: ``G[j, m]`` is the best cost of covering observations ``m..n-1``
(0-based) with ``j`` windows.  Scanning candidate successors in ascending
order with strict improvement yields the lexicographically smallest optimal
split vector, which is also what :func:`brute_force` returns.

Pruning cuts a candidate as soon as its accumulated cost exceeds a known
achievable total (the incumbent).  Remaining windows cost at least zero, and
for a fixed successor the cost of a window only grows as it extends to the
left, so the scan over earlier starts can stop at the first cut.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numba
import numpy as np

from jumpreg.core import Dataset, StepFit, fit_from_splits
from jumpreg.errors import BadIncumbent, BadParam, IndexOrder, Infeasible, TooLarge

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

BRUTE_FORCE_LIMIT = 10_000_000
_COMPENSATE_ABOVE = 100_000


@numba.njit(cache=True)
def _kahan_cumsum(v):
    out = np.empty(v.size + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for i in range(v.size):
        t = v[i] - c
        u = s + t
        c = (u - s) - t
        s = u
        out[i + 1] = s
    return out


@dataclass(frozen=True)
class PrefixSums:
    """Cumulative sums with a leading zero: ``cum_y[k] = y_1 + ... + y_k``."""

    cum_y: NDArray[np.float64]
    cum_y2: NDArray[np.float64]

    @classmethod
    def from_values(cls, y: ArrayLike) -> PrefixSums:
        y = np.ascontiguousarray(y, dtype=np.float64)
        if y.size > _COMPENSATE_ABOVE:
            cy, cy2 = _kahan_cumsum(y), _kahan_cumsum(y * y)
        else:
            cy = np.concatenate(([0.0], np.cumsum(y)))
            cy2 = np.concatenate(([0.0], np.cumsum(y * y)))
        cy.setflags(write=False)
        cy2.setflags(write=False)
        return cls(cy, cy2)

    @property
    def n(self) -> int:
        return int(self.cum_y.size - 1)


@dataclass(frozen=True)
class SegConfig:
    d: int
    min_seg_len: int = 2
    prune: bool = False
    incumbent_rss: float | None = None

    def __post_init__(self) -> None:
        if self.d < 1:
            raise BadParam("d must be a positive integer")
        if self.min_seg_len < 1:
            raise BadParam("min_seg_len must be a positive integer")
        if self.incumbent_rss is not None and not self.incumbent_rss >= 0:
            raise BadParam("incumbent_rss must be nonnegative")

    def check(self, n: int) -> None:
        if self.d * self.min_seg_len > n:
            raise Infeasible(
                f"{self.d} windows of at least {self.min_seg_len} observations need n >= "
                f"{self.d * self.min_seg_len}, got n = {n}"
            )


@dataclass(frozen=True)
class DPStats:
    """Cell accounting for one dynamic-programming run.

    ``objective`` is the minimised cost in the DP's own arithmetic (on
    mean-centred data); it is the quantity incumbents are compared with.
    """

    evaluations: int
    skipped: int
    objective: float

    @property
    def total(self) -> int:
        return self.evaluations + self.skipped


@numba.njit(cache=True)
def _cost(cy, cy2, a, b):
    s = cy[b] - cy[a]
    c = (cy2[b] - cy2[a]) - s * s / (b - a)
    return c if c > 0.0 else 0.0


@numba.njit(cache=True)
def _dp_kernel(cy, cy2, n, d, L, bound):
    G = np.full((d + 1, n + 1), np.inf)
    A = np.full((d + 1, n + 1), -1, dtype=np.int64)
    evals = 0
    skipped = 0
    for m in range((d - 1) * L, n - L + 1):
        G[1, m] = _cost(cy, cy2, m, n)
        evals += 1
    for j in range(2, d + 1):
        mlo = (d - j) * L
        for k in range((d - j + 1) * L, n - (j - 1) * L + 1):
            mhi = k - L
            if j == d:
                mhi = min(mhi, 0)
            cnt = mhi - mlo + 1
            if cnt <= 0:
                continue
            g = G[j - 1, k]
            if g > bound:
                skipped += cnt
                continue
            for m in range(mhi, mlo - 1, -1):
                v = _cost(cy, cy2, m, k) + g
                evals += 1
                if v > bound:
                    skipped += m - mlo
                    break
                if v < G[j, m]:
                    G[j, m] = v
                    A[j, m] = k
    return G[d, 0], A, evals, skipped


def _centered_prefix(data: Dataset) -> PrefixSums:
    # centring leaves every window cost unchanged and limits cancellation
    return PrefixSums.from_values(data.y - data.y.mean())


def _partition_cost(ps: PrefixSums, splits: Sequence[int]) -> float:
    """Total cost summed right to left, matching the DP's association order."""
    edges = (0, *splits, ps.n)
    total = 0.0
    for a, b in reversed(list(zip(edges[:-1], edges[1:]))):
        total = _cost(ps.cum_y, ps.cum_y2, a, b) + total
    return total


def segment_cost(ps: PrefixSums, i: int, j: int) -> float:
    """Sum of squares of observations ``i..j`` (1-based, inclusive) about their mean."""
    if i > j:
        raise IndexOrder(f"segment start {i} exceeds end {j}")
    if i < 1 or j > ps.n:
        raise IndexOrder(f"segment [{i}, {j}] outside 1..{ps.n}")
    return float(_cost(ps.cum_y, ps.cum_y2, i - 1, j))


def _run_dp(data: Dataset, cfg: SegConfig, incumbent: float | None) -> tuple[StepFit, DPStats]:
    cfg.check(data.n)
    ps = _centered_prefix(data)
    n, d, L = data.n, cfg.d, cfg.min_seg_len
    if incumbent is None or math.isinf(incumbent):
        bound = math.inf
    else:
        bound = incumbent + 1e-9 * max(float(ps.cum_y2[-1]), 1e-300)
    if d == 1:
        obj = _partition_cost(ps, ())
        return fit_from_splits(data, ()), DPStats(1, 0, obj)
    obj, A, evals, skipped = _dp_kernel(ps.cum_y, ps.cum_y2, n, d, L, bound)
    if not obj <= bound:
        raise BadIncumbent(f"incumbent {incumbent!r} is below the optimum; no partition survives pruning")
    splits = []
    m = 0
    for j in range(d, 1, -1):
        m = int(A[j, m])
        splits.append(m)
    return fit_from_splits(data, splits), DPStats(int(evals), int(skipped), float(obj))


def dp_optimal(data: Dataset, cfg: SegConfig, *, return_stats: bool = False):
    """Globally optimal ``cfg.d``-window fit by exhaustive dynamic programming."""
    fit, stats = _run_dp(data, cfg, None)
    return (fit, stats) if return_stats else fit


def dp_pruned(data: Dataset, cfg: SegConfig) -> tuple[StepFit, DPStats]:
    """Same optimum as :func:`dp_optimal`, skipping cells that cannot beat ``cfg.incumbent_rss``.

    The incumbent must be achievable, e.g. the ``rss`` returned by
    :func:`greedy_init`; ``None`` disables pruning.
    """
    return _run_dp(data, cfg, cfg.incumbent_rss)


def _best_split(ps: PrefixSums, lo: int, hi: int, L: int) -> tuple[int, float] | None:
    """Best single split of ``[lo, hi)`` with both parts at least ``L`` long (smallest on ties)."""
    if hi - lo < 2 * L:
        return None
    v = np.arange(lo + L, hi - L + 1)
    cy, cy2 = ps.cum_y, ps.cum_y2
    s_left = cy[v] - cy[lo]
    s_right = cy[hi] - cy[v]
    left = np.maximum((cy2[v] - cy2[lo]) - s_left * s_left / (v - lo), 0.0)
    right = np.maximum((cy2[hi] - cy2[v]) - s_right * s_right / (hi - v), 0.0)
    total = left + right
    i = int(np.argmin(total))
    return int(v[i]), float(total[i])


def greedy_init(data: Dataset, d: int, min_seg_len: int = 2) -> tuple[tuple[int, ...], float]:
    """Fast heuristic partition used as an incumbent for :func:`dp_pruned`.

    Splits are added one at a time inside the last window.  After each
    addition the previous split is re-optimised between its neighbours; while
    it moves, the procedure keeps stepping back through earlier splits.

    Returns the sorted split indices and their total cost.
    """
    if d < 2:
        raise BadParam("greedy_init needs d >= 2")
    SegConfig(d, min_seg_len).check(data.n)
    ps = _centered_prefix(data)
    n, L = data.n, min_seg_len

    def pair_cost(lo: int, v: int, hi: int) -> float:
        return _cost(ps.cum_y, ps.cum_y2, lo, v) + _cost(ps.cum_y, ps.cum_y2, v, hi)

    first = _best_split(ps, 0, n, L)
    assert first is not None
    splits = [first[0]]
    max_moves = 50 * d * d
    moves = 0
    while len(splits) < d - 1:
        placed = _best_split(ps, splits[-1], n, L)
        if placed is not None:
            splits.append(placed[0])
            i = len(splits) - 1
        else:
            # last window too short: split whichever window gains most
            edges = [0, *splits, n]
            best = None
            for w, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
                cand = _best_split(ps, lo, hi, L)
                if cand is None:
                    continue
                gain = _cost(ps.cum_y, ps.cum_y2, lo, hi) - cand[1]
                if best is None or gain > best[0]:
                    best = (gain, w, cand[0])
            if best is None:
                splits = [int(round(k * n / d)) for k in range(1, d)]
                break
            splits.insert(best[1], best[2])
            i = best[1]
        while i >= 1 and moves < max_moves:
            lo = splits[i - 2] if i >= 2 else 0
            hi = splits[i]
            cur = splits[i - 1]
            cand = _best_split(ps, lo, hi, L)
            if cand is None or not cand[1] < pair_cost(lo, cur, hi):
                break
            splits[i - 1] = cand[0]
            moves += 1
            i -= 1
    splits_t = tuple(sorted(splits))
    return splits_t, _partition_cost(ps, splits_t)


def brute_force(data: Dataset, cfg: SegConfig) -> StepFit:
    """Exhaustive search over all admissible split vectors (test oracle)."""
    cfg.check(data.n)
    n, d, L = data.n, cfg.d, cfg.min_seg_len
    if math.comb(n - 1, d - 1) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"C({n - 1}, {d - 1}) placements exceed {BRUTE_FORCE_LIMIT}")
    ps = _centered_prefix(data)
    best_val = math.inf
    best: tuple[int, ...] = ()
    for combo in itertools.combinations(range(L, n - L + 1), d - 1):
        edges = (0, *combo, n)
        if any(b - a < L for a, b in zip(edges[:-1], edges[1:])):
            continue
        val = _partition_cost(ps, combo)
        if val < best_val:
            best_val, best = val, combo
    return fit_from_splits(data, best)
