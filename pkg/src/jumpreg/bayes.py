"""Exact posterior for the break point of a two-window step model.

With flat priors on both levels and on ``log sigma`` and a uniform prior on
the break, the levels and spread integrate out in closed form.  The posterior density
of the break is constant on each inter-observation gap; for the gap after
observation ``k`` its log mass is

    log(gap_k) - log(k (n - k)) / 2 - (n - 2) / 2 * log(RSS_k),

where ``RSS_k`` is the two-window residual sum of squares splitting after
``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import logsumexp

from jumpreg._rng import Seed, substream
from jumpreg.core import Dataset
from jumpreg.errors import BadParam, BadProb, TooFew
from jumpreg.segmentation import PrefixSums, SegConfig, dp_optimal

if TYPE_CHECKING:
    from numpy.typing import NDArray

DEFAULT_LEVEL = 0.95


@dataclass(frozen=True)
class BreakPosterior:
    """Piecewise-constant posterior over the break point.

    Gap ``i`` runs from ``interval_lefts[i]`` to ``interval_rights[i]`` and
    carries unnormalised log mass ``log_weights[i]``; mass is spread
    uniformly within a gap.
    """

    interval_lefts: NDArray[np.float64]
    interval_rights: NDArray[np.float64]
    log_weights: NDArray[np.float64]
    posterior_mean: float
    credible_interval: tuple[float, float]
    level: float = DEFAULT_LEVEL

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.exp(self.log_weights - logsumexp(self.log_weights))

    def cdf(self, g: float) -> float:
        w = self.weights
        frac = np.clip((g - self.interval_lefts) / (self.interval_rights - self.interval_lefts), 0.0, 1.0)
        return float(min(1.0, math.fsum(w * frac)))

    def quantile(self, q: float) -> float:
        if not 0 <= q <= 1:
            raise BadProb("quantile level must lie in [0, 1]")
        w = self.weights
        cum = np.cumsum(w)
        i = min(int(np.searchsorted(cum, q * cum[-1], side="left")), w.size - 1)
        below = cum[i] - w[i]
        t = 0.0 if w[i] == 0 else min(max((q * cum[-1] - below) / w[i], 0.0), 1.0)
        lo, hi = self.interval_lefts[i], self.interval_rights[i]
        return float(lo + t * (hi - lo))

    def credible(self, level: float) -> tuple[float, float]:
        """Equal-tailed credible interval."""
        if not 0 < level < 1:
            raise BadProb("level must lie in (0, 1)")
        a = 0.5 * (1 - level)
        return self.quantile(a), self.quantile(1 - a)


def _split_rss(ps: PrefixSums, ks: NDArray[np.intp]) -> NDArray[np.float64]:
    n = ps.n
    cy, cy2 = ps.cum_y, ps.cum_y2
    sl = cy[ks]
    sr = cy[n] - sl
    rss = cy2[n] - sl * sl / ks - sr * sr / (n - ks)
    return np.maximum(rss, 0.0)


def log_gap_weights(data: Dataset, min_seg_len: int = 2) -> tuple[NDArray[np.intp], NDArray[np.float64]]:
    """Split indices ``k`` and unnormalised log posterior mass of the gap after each."""
    n, L = data.n, min_seg_len
    if L < 1:
        raise BadParam("min_seg_len must be positive")
    if n < 2 * L:
        raise TooFew(f"need at least {2 * L} observations, got {n}")
    ks = np.arange(L, n - L + 1)
    ps = PrefixSums.from_values(data.y - data.y.mean())
    rss = _split_rss(ps, ks)
    gap = data.x[ks] - data.x[ks - 1]
    with np.errstate(divide="ignore"):
        logw = np.log(gap) - 0.5 * np.log(ks * (n - ks).astype(np.float64)) - 0.5 * (n - 2) * np.log(rss)
    if np.any(np.isposinf(logw)):
        # an exact fit absorbs all mass; split it by gap length among such gaps
        logw = np.where(np.isposinf(logw), np.log(gap), -np.inf)
    return ks, logw


def posterior_gamma(data: Dataset, min_seg_len: int = 2, level: float = DEFAULT_LEVEL) -> BreakPosterior:
    """Marginal posterior of the break location under reference priors."""
    ks, logw = log_gap_weights(data, min_seg_len)
    lefts = np.array(data.x[ks - 1])
    rights = np.array(data.x[ks])
    w = np.exp(logw - logsumexp(logw))
    mean = math.fsum(w * 0.5 * (lefts + rights))
    post = BreakPosterior(lefts, rights, logw, mean, (math.nan, math.nan), level)
    object.__setattr__(post, "credible_interval", post.credible(level))
    return post


def bayes_estimate(post: BreakPosterior) -> float:
    """Posterior mean, the Bayes rule under squared error loss."""
    return post.posterior_mean


@dataclass(frozen=True)
class TwoWindowScenario:
    a0: float = 2.0
    b0: float = 3.0
    gamma0: float = 0.5
    sigma: float = 0.5
    n: int = 500
    design: str = "uniform"

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise BadParam("sigma must be positive")
        if not 0 < self.gamma0 < 1:
            raise BadParam("gamma0 must lie in (0, 1)")
        if self.design not in ("uniform", "equispaced"):
            raise BadParam(f"unknown design {self.design!r}")

    def draw(self, rng: np.random.Generator) -> Dataset:
        if self.design == "uniform":
            x = np.sort(rng.uniform(0.0, 1.0, self.n))
        else:
            x = (np.arange(1, self.n + 1) - 0.5) / self.n
        y = np.where(x <= self.gamma0, self.a0, self.b0) + self.sigma * rng.standard_normal(self.n)
        return Dataset(x, y)


@dataclass(frozen=True)
class MSEComparison:
    mse_ml: float
    mse_bayes: float
    se_diff: float
    replicates: int

    @property
    def z(self) -> float:
        """Standardised advantage of the Bayes estimator (positive when it wins)."""
        return (self.mse_ml - self.mse_bayes) / self.se_diff if self.se_diff > 0 else math.nan


def scaled_errors(
    scenario: TwoWindowScenario, replicates: int, rng_seed: Seed, min_seg_len: int = 2
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-replicate ``n * (gamma_hat - gamma0)`` for the ML and Bayes estimators."""
    err = np.empty((replicates, 2))
    cfg = SegConfig(2, min_seg_len)
    for r in range(replicates):
        data = scenario.draw(substream(rng_seed, r))
        g_ml = float(dp_optimal(data, cfg).breakpoints[0])
        g_b = posterior_gamma(data, min_seg_len).posterior_mean
        err[r] = g_ml - scenario.gamma0, g_b - scenario.gamma0
    err *= scenario.n
    return err[:, 0], err[:, 1]


def mse_compare(
    scenario: TwoWindowScenario, replicates: int, rng_seed: Seed, min_seg_len: int = 2
) -> MSEComparison:
    """Monte Carlo mean squared errors of ``n * (gamma_hat - gamma0)`` with a paired standard error."""
    if replicates < 100:
        raise BadParam("use at least 100 replicates")
    e_ml, e_b = scaled_errors(scenario, replicates, rng_seed, min_seg_len)
    diff = e_ml**2 - e_b**2
    return MSEComparison(
        float(np.mean(e_ml**2)),
        float(np.mean(e_b**2)),
        float(diff.std(ddof=1) / math.sqrt(replicates)),
        replicates,
    )
