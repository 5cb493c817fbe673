"""Step-function regression model: data container, fitted model, profile fit.

Windows are half-open on the left, ``(gamma_{j-1}, gamma_j]``, so an
observation sitting exactly on a break point belongs to the left window.
Internally a partition is described by *split indices*: split ``k`` means
that a window ends after the first ``k`` sorted observations.  Reported break
points are the midpoints of the corresponding inter-observation gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from jumpreg.errors import DuplicateX, EmptyWindow, InputError, NonIncreasing

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray


def _frozen(a: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Sorted scatter data ``(x_i, y_i)``.

    Use :meth:`from_arrays` to build one from unsorted input; the plain
    constructor requires ``x`` to be strictly increasing already.
    """

    x: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self) -> None:
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.ndim != 1 or y.ndim != 1:
            raise InputError("x and y must be one-dimensional")
        if x.shape != y.shape:
            raise InputError(f"x and y lengths differ ({x.size} vs {y.size})")
        if x.size < 2:
            raise InputError("need at least two observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputError("x and y must be finite")
        dx = np.diff(x)
        if np.any(dx == 0):
            raise DuplicateX(float(x[1:][dx == 0][0]))
        if np.any(dx < 0):
            raise NonIncreasing("x must be sorted ascending; use Dataset.from_arrays")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_arrays(cls, x: ArrayLike, y: ArrayLike) -> Dataset:
        """Sort by ``x`` and validate.  Tied ``x`` values raise :class:`DuplicateX`."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.shape != y.shape:
            raise InputError(f"x and y lengths differ ({x.size} vs {y.size})")
        order = np.argsort(x, kind="stable")
        return cls(x[order], y[order])

    @property
    def n(self) -> int:
        return int(self.x.size)

    def gap_midpoint(self, k: int) -> float:
        """Midpoint of the gap between observation ``k`` and ``k + 1`` (1-based)."""
        return 0.5 * (float(self.x[k - 1]) + float(self.x[k]))

    def shifted(self, dy: float = 0.0, scale: float = 1.0) -> Dataset:
        return Dataset(self.x, scale * self.y + dy)


def loglik_from_rss(rss: float, n: int) -> float:
    """Profile log-likelihood maximum ``-n log sigma0 - n/2`` with ``sigma0^2 = rss/n``."""
    if rss <= 0.0:
        return math.inf
    return -0.5 * n * math.log(rss / n) - 0.5 * n


@dataclass(frozen=True)
class StepFit:
    """A fitted step function with ``d`` windows.

    ``splits`` holds the integer split indices behind ``breakpoints``;
    ``counts`` the number of observations per window.
    """

    breakpoints: NDArray[np.float64]
    levels: NDArray[np.float64]
    rss: float
    n: int
    splits: tuple[int, ...] = ()
    counts: tuple[int, ...] = ()
    x_range: tuple[float, float] = (0.0, 1.0)
    rss_floored: bool = False
    sigma0_hat: float = field(init=False)
    loglik_max: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "breakpoints", _frozen(self.breakpoints))
        object.__setattr__(self, "levels", _frozen(self.levels))
        if self.levels.size != self.breakpoints.size + 1:
            raise InputError("need exactly one more level than break points")
        if self.rss < 0:
            raise InputError("rss must be nonnegative")
        object.__setattr__(self, "sigma0_hat", math.sqrt(self.rss / self.n))
        object.__setattr__(self, "loglik_max", loglik_from_rss(self.rss, self.n))

    @property
    def d(self) -> int:
        return int(self.levels.size)

    @property
    def jumps(self) -> NDArray[np.float64]:
        return np.diff(self.levels)

    def floored(self, floor: float) -> StepFit:
        """Copy with ``rss`` raised to ``floor`` when it is smaller."""
        if self.rss >= floor:
            return self
        return replace(self, rss=floor, rss_floored=True)


def _window_counts(data: Dataset, breakpoints: NDArray[np.float64]) -> NDArray[np.intp]:
    bp = np.asarray(breakpoints, dtype=np.float64).ravel()
    if bp.size and np.any(np.diff(bp) <= 0):
        raise NonIncreasing("break points must be strictly increasing")
    if bp.size and (bp[0] <= data.x[0] or bp[-1] >= data.x[-1]):
        raise NonIncreasing("break points must lie strictly inside the data range")
    # number of x_i <= gamma_j, i.e. right-closed windows
    ends = np.searchsorted(data.x, bp, side="right")
    edges = np.concatenate(([0], ends, [data.n]))
    counts = np.diff(edges)
    if np.any(counts == 0):
        j = int(np.flatnonzero(counts == 0)[0])
        raise EmptyWindow(f"window {j + 1} contains no observation")
    return counts


def _levels_and_rss(y: NDArray[np.float64], counts: Sequence[int]) -> tuple[NDArray[np.float64], float]:
    counts = np.asarray(counts, dtype=np.intp)
    labels = np.repeat(np.arange(counts.size), counts)
    levels = np.bincount(labels, weights=y, minlength=counts.size) / counts
    resid = y - levels[labels]
    return levels, float(resid @ resid)


def fit_from_splits(data: Dataset, splits: Sequence[int]) -> StepFit:
    """Profile fit for the partition given by integer split indices."""
    splits = tuple(int(k) for k in splits)
    edges = (0, *splits, data.n)
    counts = tuple(b - a for a, b in zip(edges[:-1], edges[1:]))
    if any(c <= 0 for c in counts):
        raise EmptyWindow(f"split indices {splits} leave an empty window")
    levels, rss = _levels_and_rss(data.y, counts)
    bps = [data.gap_midpoint(k) for k in splits]
    return StepFit(
        breakpoints=np.array(bps),
        levels=levels,
        rss=rss,
        n=data.n,
        splits=splits,
        counts=counts,
        x_range=(float(data.x[0]), float(data.x[-1])),
    )


def profile_fit(data: Dataset, breakpoints: ArrayLike = ()) -> StepFit:
    """Least-squares levels for fixed break points.

    Levels are the window means of ``y``; ``rss`` is the pooled within-window
    sum of squares.  Reported break points are the ones supplied.
    """
    bp = np.asarray(breakpoints, dtype=np.float64).ravel()
    counts = _window_counts(data, bp)
    levels, rss = _levels_and_rss(data.y, counts)
    return StepFit(
        breakpoints=bp,
        levels=levels,
        rss=rss,
        n=data.n,
        splits=tuple(int(k) for k in np.cumsum(counts)[:-1]),
        counts=tuple(int(c) for c in counts),
        x_range=(float(data.x[0]), float(data.x[-1])),
    )


def weighted_level_score(data: Dataset, breakpoints: ArrayLike = ()) -> float:
    """``sum_j n_j * abar_j**2``; equals ``sum(y**2) - rss``."""
    bp = np.asarray(breakpoints, dtype=np.float64).ravel()
    counts = _window_counts(data, bp)
    levels, _ = _levels_and_rss(data.y, counts)
    return float(np.dot(counts, levels * levels))


def predict(fit: StepFit, x0: ArrayLike) -> float | NDArray[np.float64]:
    """Evaluate the fitted step function; a point on a break belongs to the left window."""
    idx = np.searchsorted(fit.breakpoints, x0, side="left")
    out = fit.levels[idx]
    if np.ndim(out) == 0:
        return float(out)
    return out
