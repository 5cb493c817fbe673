"""Two-sided compound Poisson limit processes.

For intensity ``lam`` the count process ``N*(s)`` is an independent Poisson
process on each side of zero, and ``W*(s)`` sums standard normal marks at
its points.  The localised least-squares criterion around a break is

    M(s) = sigma * jump * W*(s) - 0.5 * c(s) * N*(s),

with ``c(s) = c_pos`` for ``s >= 0`` and ``c_neg`` for ``s < 0``.  A jump at
time ``t`` is counted on the positive side for ``s >= t`` and on the negative
side for ``s <= -t``, so the interval holding zero is ``(-t'_1, t_1)``.

Everything here is Monte Carlo.  Replicate ``r`` of a simulation seeded with
``seed`` always draws from ``substream(seed, r)``, so results do not depend on
evaluation order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numba
import numpy as np
from scipy.stats import gaussian_kde

from jumpreg._rng import Seed, substream
from jumpreg.errors import (
    BadParam,
    BadProb,
    BoundaryMax,
    InputError,
    Mismatch,
    NonPositiveCWarning,
    TruncationError,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from jumpreg.core import StepFit

MAX_DOUBLINGS = 4
TAIL_TOL = 1e-6
_MIN_JUMPS = 50.0
_DRIFT_JUMPS = 32.0
_MAX_START_JUMPS = 20_000.0


@dataclass(frozen=True)
class CompoundPoissonPath:
    """One realisation of ``(N*, W*)`` on ``[-range_S, range_S]``.

    ``pos_times`` and ``neg_times`` are positive and increasing; negative-side
    jumps sit at ``-neg_times``.
    """

    lam: float
    range_S: float
    pos_times: NDArray[np.float64]
    neg_times: NDArray[np.float64]
    pos_marks: NDArray[np.float64]
    neg_marks: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.pos_times.size != self.pos_marks.size or self.neg_times.size != self.neg_marks.size:
            raise InputError("jump times and marks must pair up on each side")

    def _side(self, s: float):
        if s >= 0:
            return self.pos_times, self.pos_marks, s
        return self.neg_times, self.neg_marks, -s

    def count(self, s: float) -> int:
        """``N*(lam, s)``."""
        times, _, u = self._side(s)
        return int(np.searchsorted(times, u, side="right"))

    def w(self, s: float) -> float:
        """``W*(lam, s)``."""
        times, marks, u = self._side(s)
        k = int(np.searchsorted(times, u, side="right"))
        return float(marks[:k].sum())

    def reflected(self) -> CompoundPoissonPath:
        return CompoundPoissonPath(
            self.lam, self.range_S, self.neg_times, self.pos_times, self.neg_marks, self.pos_marks
        )


@dataclass(frozen=True)
class MParams:
    """Parameters of the criterion process at one break.

    ``c_neg`` plays the role of c1 (left limit of the true curve) and applies
    for ``s < 0``; ``c_pos`` is c2 and applies for ``s >= 0``.
    """

    sigma: float
    jump_abs: float
    c_pos: float
    c_neg: float
    lam: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise BadParam("sigma must be positive")
        if not self.lam > 0:
            raise BadParam("lam must be positive")
        if self.jump_abs < 0 or self.c_pos < 0 or self.c_neg < 0:
            raise BadParam("jump_abs, c_pos and c_neg must be nonnegative")

    @classmethod
    def model_correct(cls, sigma: float, jump_abs: float, lam: float) -> MParams:
        c = jump_abs * jump_abs
        return cls(sigma, abs(jump_abs), c, c, lam)

    @property
    def e0(self) -> float:
        return 0.5 * self.jump_abs / self.sigma

    @property
    def scale(self) -> float:
        return self.sigma * self.jump_abs


def default_range(p: MParams) -> float:
    """Starting half-width: at least 50 expected jumps per side, more for weak drift.

    Per jump the criterion drifts by ``-c/2`` against noise of size
    ``sigma * jump``; roughly ``32 / r**2`` jumps with ``r`` the ratio of the two
    keep the chance of a later, higher excursion negligible.
    """
    c = min(p.c_pos, p.c_neg)
    if p.scale > 0 and c > 0:
        r = 0.5 * c / p.scale
        jumps = min(max(_MIN_JUMPS, _DRIFT_JUMPS / (r * r)), _MAX_START_JUMPS)
    else:
        jumps = _MIN_JUMPS
    return jumps / p.lam


def _draw_side(rng: np.random.Generator, lam: float, lo: float, hi: float):
    k = rng.poisson(lam * (hi - lo))
    times = np.sort(rng.uniform(lo, hi, size=k))
    marks = rng.standard_normal(k)
    return times, marks


def _as_rng(rng_seed: Seed | np.random.Generator) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return substream(rng_seed)


def simulate_path(lam: float, range_S: float, rng_seed: Seed | np.random.Generator) -> CompoundPoissonPath:
    """Draw jump times and marks on both sides of zero up to ``range_S``."""
    if not lam > 0:
        raise BadParam("intensity must be positive")
    if not range_S > 0:
        raise BadParam("range_S must be positive")
    rng = _as_rng(rng_seed)
    pt, pm = _draw_side(rng, lam, 0.0, range_S)
    nt, nm = _draw_side(rng, lam, 0.0, range_S)
    return CompoundPoissonPath(float(lam), float(range_S), pt, nt, pm, nm)


def extend_path(path: CompoundPoissonPath, range_S: float, rng: np.random.Generator) -> CompoundPoissonPath:
    """Append independent jumps in ``(path.range_S, range_S]`` on both sides."""
    if range_S <= path.range_S:
        return path
    pt, pm = _draw_side(rng, path.lam, path.range_S, range_S)
    nt, nm = _draw_side(rng, path.lam, path.range_S, range_S)
    return CompoundPoissonPath(
        path.lam,
        float(range_S),
        np.concatenate((path.pos_times, pt)),
        np.concatenate((path.neg_times, nt)),
        np.concatenate((path.pos_marks, pm)),
        np.concatenate((path.neg_marks, nm)),
    )


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant function on ``[edges[0], edges[-1]]``.

    ``values[i]`` holds on the interval between ``edges[i]`` and
    ``edges[i + 1]``; consecutive values always differ.
    """

    edges: NDArray[np.float64]
    values: NDArray[np.float64]

    def __call__(self, s: float) -> float:
        i = int(np.searchsorted(self.edges, s, side="right")) - 1
        i = min(max(i, 0), self.values.size - 1)
        return float(self.values[i])


def _side_values(scale: float, c: float, marks: NDArray[np.float64]) -> NDArray[np.float64]:
    return scale * np.cumsum(marks) - 0.5 * c * np.arange(1, marks.size + 1)


def m_process(path: CompoundPoissonPath, p: MParams) -> StepFunction:
    """The criterion process ``M(s)`` for one path, as a step function on ``[-S, S]``."""
    if not math.isclose(path.lam, p.lam, rel_tol=1e-12):
        raise Mismatch(f"path intensity {path.lam} differs from parameter intensity {p.lam}")
    vp = _side_values(p.scale, p.c_pos, path.pos_marks)
    vn = _side_values(p.scale, p.c_neg, path.neg_marks)
    S = path.range_S
    edges = np.concatenate(([-S], -path.neg_times[::-1], path.pos_times, [S]))
    values = np.concatenate((vn[::-1], [0.0], vp))
    keep = np.concatenate(([True], values[1:] != values[:-1]))
    # merging equal neighbours drops the edge between them
    return StepFunction(np.concatenate((edges[:-1][keep], [S])), values[keep])


class ArgmaxInterval(NamedTuple):
    lo: float
    hi: float
    value: float
    w: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def argmax_interval(M: StepFunction, path: CompoundPoissonPath | None = None) -> ArgmaxInterval:
    """Leftmost maximising interval of ``M``; ``w`` is ``W*`` on it when a path is given."""
    vmax = M.values.max()
    i = int(np.flatnonzero(M.values == vmax)[0])
    if i == 0 or i == M.values.size - 1:
        raise BoundaryMax("maximum attained on a boundary interval; extend range_S")
    lo, hi = float(M.edges[i]), float(M.edges[i + 1])
    w = path.w(0.5 * (lo + hi)) if path is not None else math.nan
    return ArgmaxInterval(lo, hi, float(vmax), w)


def sargmax_m(M: StepFunction, path: CompoundPoissonPath | None = None) -> float:
    """Smallest maximiser: the left end of the leftmost maximising interval."""
    return argmax_interval(M, path).lo


@numba.njit(cache=True)
def _argmax_kernel(pt, nt, pm, nm, scale, c_pos, c_neg):
    # returns (status, lo, hi, top, w); status 1 flags a boundary maximum
    top = 0.0
    side = 0
    k_best = -1
    w_best = 0.0
    cw = 0.0
    for k in range(nm.size):
        cw += nm[k]
        v = scale * cw - 0.5 * c_neg * (k + 1)
        # ties go to larger k, i.e. further left, and beat the zero interval
        if v >= top:
            top, side, k_best, w_best = v, -1, k, cw
    cw = 0.0
    for k in range(pm.size):
        cw += pm[k]
        v = scale * cw - 0.5 * c_pos * (k + 1)
        if v > top:
            top, side, k_best, w_best = v, 1, k, cw
    if side == -1:
        if k_best == nm.size - 1:
            return 1, 0.0, 0.0, top, w_best
        return 0, -nt[k_best + 1], -nt[k_best], top, w_best
    if side == 0:
        if nt.size == 0 or pt.size == 0:
            return 1, 0.0, 0.0, 0.0, 0.0
        return 0, -nt[0], pt[0], 0.0, 0.0
    if k_best == pm.size - 1:
        return 1, 0.0, 0.0, top, w_best
    return 0, pt[k_best], pt[k_best + 1], top, w_best


def _fast_argmax(path: CompoundPoissonPath, p: MParams) -> ArgmaxInterval:
    """Same result as ``argmax_interval(m_process(path, p), path)`` without building ``M``."""
    if p.scale == 0 and p.c_pos == 0 and p.c_neg == 0:
        raise BoundaryMax("M is identically zero")
    status, lo, hi, top, w = _argmax_kernel(
        path.pos_times, path.neg_times, path.pos_marks, path.neg_marks, p.scale, p.c_pos, p.c_neg
    )
    if status:
        raise BoundaryMax("maximum attained on a boundary interval; extend range_S")
    return ArgmaxInterval(float(lo), float(hi), float(top), float(w))


def _replicate_argmax(p: MParams, seed: Seed, rep: int, range_S: float | None) -> ArgmaxInterval:
    rng = substream(seed, rep)
    S = default_range(p) if range_S is None else range_S
    path = simulate_path(p.lam, S, rng)
    for attempt in range(MAX_DOUBLINGS + 1):
        try:
            return _fast_argmax(path, p)
        except BoundaryMax:
            if attempt == MAX_DOUBLINGS:
                raise
            path = extend_path(path, 2 * path.range_S, rng)
    raise AssertionError("unreachable")


def argmax_sample(
    p: MParams, reps: int, rng_seed: Seed, range_S: float | None = None
) -> list[ArgmaxInterval]:
    """Maximising intervals of ``M`` over ``reps`` independent paths."""
    if reps < 1:
        raise BadParam("reps must be at least 1")
    return [_replicate_argmax(p, rng_seed, r, range_S) for r in range(reps)]


class MCEstimate(NamedTuple):
    value: float
    se: float
    reps: int


def _mean_se(x: NDArray[np.float64]) -> MCEstimate:
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return MCEstimate(float(x.mean()), se, int(x.size))


def kappa_hat(p: MParams, reps: int = 1000, rng_seed: Seed = 0, range_S: float | None = None) -> MCEstimate:
    """Monte Carlo mean of ``sigma * jump * W*(lam, s_hat)`` at the argmax of ``M``."""
    if reps < 1:
        raise BadParam("reps must be at least 1")
    if p.jump_abs == 0:
        return MCEstimate(0.0, 0.0, reps)
    w = np.array([a.w for a in argmax_sample(p, reps, rng_seed, range_S)])
    return _mean_se(p.scale * w)


def quantile_G(
    e0: float,
    lam: float,
    prob: float,
    reps: int = 100_000,
    rng_seed: Seed = 0,
    *,
    symmetrize: bool = True,
) -> float:
    """Upper ``prob`` quantile of the limiting break-point error for standardised jump ``e0``.

    The error is the midpoint of the maximising interval of ``W* - e0 N*``
    (the gap-midpoint estimator's limit).  By default the sample is pooled
    with its mirror image, which the symmetry of that law allows.
    """
    if not 0.5 < prob < 1:
        raise BadProb(f"prob must lie in (0.5, 1), got {prob}")
    if not e0 > 0:
        raise BadParam("e0 must be positive")
    p = MParams(sigma=1.0, jump_abs=1.0, c_pos=2 * e0, c_neg=2 * e0, lam=lam)
    s = np.array([a.mid for a in argmax_sample(p, reps, rng_seed)])
    if symmetrize:
        s = np.concatenate((s, -s))
    return float(np.quantile(s, prob))


def ci_breakpoint(
    fit: StepFit,
    j: int,
    level: float,
    density_at: float,
    sigma_hat: float,
    reps: int = 100_000,
    rng_seed: Seed = 0,
) -> tuple[float, float]:
    """Interval ``gamma_j +/- q / n`` for break ``j`` (0-based) of a fitted step function."""
    if fit.d < 2:
        raise BadParam("confidence intervals need at least two windows")
    if not 0 <= j < fit.d - 1:
        raise BadParam(f"break index {j} out of range 0..{fit.d - 2}")
    if not 0 < level < 1:
        raise BadProb(f"level must lie in (0, 1), got {level}")
    if not sigma_hat > 0:
        raise BadParam("sigma_hat must be positive")
    e0 = 0.5 * abs(fit.levels[j + 1] - fit.levels[j]) / sigma_hat
    q = quantile_G(e0, density_at, 0.5 * (1 + level), reps, rng_seed)
    g = float(fit.breakpoints[j])
    return g - q / fit.n, g + q / fit.n


def _weights(M: StepFunction, sigma: float):
    lo, hi = M.edges[:-1], M.edges[1:]
    length = hi - lo
    w = length * np.exp((M.values - M.values.max()) / (sigma * sigma))
    return lo, hi, length, w


def posterior_mean_of(M: StepFunction, sigma: float, tail_tol: float | None = TAIL_TOL) -> float:
    """``int s exp(M/sigma^2) ds / int exp(M/sigma^2) ds`` over the range of ``M``.

    With ``tail_tol`` set, raises :class:`TruncationError` when more than that
    fraction of mass sits in the outer tenth of the range on either side.
    """
    lo, hi, length, w = _weights(M, sigma)
    total = math.fsum(w)
    if tail_tol is not None:
        S_lo, S_hi = float(M.edges[0]), float(M.edges[-1])
        margin = 0.1 * (S_hi - S_lo) / 2
        left = math.fsum(w * np.clip((S_lo + margin - lo) / length, 0, 1))
        right = math.fsum(w * np.clip((hi - (S_hi - margin)) / length, 0, 1))
        if max(left, right) > tail_tol * total:
            raise TruncationError("posterior mass near the truncation boundary exceeds tolerance")
    mid = 0.5 * (lo + hi)
    return math.fsum(w * mid) / total


def integrated_likelihood_of(M: StepFunction, sigma: float) -> float:
    """``int exp((M(s) - max M) / sigma^2) ds``."""
    return math.fsum(_weights(M, sigma)[3])


def _replicate_M(p: MParams, seed: Seed, rep: int, range_S: float | None, need_tail: bool):
    rng = substream(seed, rep)
    S = default_range(p) if range_S is None else range_S
    path = simulate_path(p.lam, S, rng)
    for attempt in range(MAX_DOUBLINGS + 1):
        M = m_process(path, p)
        try:
            a = argmax_interval(M)
            if need_tail:
                K = posterior_mean_of(M, p.sigma)
            else:
                K = math.nan
            return path, M, a, K
        except (BoundaryMax, TruncationError):
            if attempt == MAX_DOUBLINGS:
                raise
            path = extend_path(path, 2 * path.range_S, rng)
    raise AssertionError("unreachable")


def bayes_limit_K(p: MParams, rng_seed: Seed, range_S: float | None = None) -> tuple[float, float]:
    """``(K, s_hat)`` for a single path: the limiting posterior-mean error and the argmax midpoint."""
    _, _, a, K = _replicate_M(p, rng_seed, 0, range_S, True)
    return K, a.mid


def bayes_limit_sample(p: MParams, reps: int, rng_seed: Seed, range_S: float | None = None):
    """Arrays ``(K, s_mid, s_left)`` over ``reps`` independent paths."""
    out = np.empty((reps, 3))
    for r in range(reps):
        _, _, a, K = _replicate_M(p, rng_seed, r, range_S, True)
        out[r] = K, a.mid, a.lo
    return out[:, 0], out[:, 1], out[:, 2]


def mu_hat(p: MParams, reps: int, rng_seed: Seed, range_S: float | None = None) -> MCEstimate:
    """Monte Carlo mean of ``int exp((M - max M) / sigma^2) ds``."""
    if reps < 1:
        raise BadParam("reps must be at least 1")
    vals = np.empty(reps)
    for r in range(reps):
        _, M, _, _ = _replicate_M(p, rng_seed, r, range_S, True)
        vals[r] = integrated_likelihood_of(M, p.sigma)
    return _mean_se(vals)


class CPair(NamedTuple):
    c1: float
    c2: float
    nonpositive: bool


def c_constants(local_mean_left: float, local_mean_right: float, a_left: float, a_right: float) -> CPair:
    """Drift constants of the criterion process from local means on either side of a break."""
    m_minus, m_plus = local_mean_left, local_mean_right
    c1 = (m_minus - a_right) ** 2 - (m_minus - a_left) ** 2
    c2 = (m_plus - a_left) ** 2 - (m_plus - a_right) ** 2
    flag = c1 <= 0 or c2 <= 0
    if flag:
        warnings.warn(
            f"non-positive drift constant (c1={c1:.4g}, c2={c2:.4g}); break may not be a genuine jump",
            NonPositiveCWarning,
            stacklevel=2,
        )
    return CPair(float(c1), float(c2), flag)


def design_density(
    x: ArrayLike, at: ArrayLike, method: str = "uniform", support: tuple[float, float] | None = None
) -> NDArray[np.float64]:
    """Design density at ``at``.

    ``"uniform"`` returns ``1 / (hi - lo)`` for ``support = (lo, hi)``; by
    default the support is the unit interval when all ``x`` lie in it and the
    observed range otherwise.  ``"kernel"`` is a Gaussian kernel estimate with
    bandwidth ``1.06 * sd(x) * n**-0.2``.
    """
    x = np.asarray(x, dtype=np.float64)
    at = np.atleast_1d(np.asarray(at, dtype=np.float64))
    if method == "uniform":
        if support is None:
            lo, hi = float(x.min()), float(x.max())
            support = (0.0, 1.0) if lo >= 0 and hi <= 1 else (lo, hi)
        return np.full(at.shape, 1.0 / (support[1] - support[0]))
    if method == "kernel":
        if x.size < 2 or not np.ptp(x) > 0:
            raise BadParam("a kernel density needs at least two distinct x values")
        return np.asarray(gaussian_kde(x, bw_method="silverman")(at), dtype=np.float64)
    raise BadParam(f"unknown density method {method!r}")
