"""Information criteria for jump and polynomial models on a common scale.

AIC-family scores are ``2 * loglik_max - 2 * b`` with an estimated bias
``b``; BIC-family scores are ``2 * loglik_max - penalty`` plus optional
refinements.  Larger is better in both families.
"""

from __future__ import annotations

import math
import warnings
from functools import cmp_to_key
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from jumpreg._rng import Seed, child_seed
from jumpreg.core import Dataset, StepFit
from jumpreg.errors import BadParam, BadPrior, DegenerateSigma, DegenerateSigmaWarning, InputError, NonPositiveCWarning
from jumpreg.processes import MParams, c_constants, design_density, kappa_hat, mu_hat
from jumpreg.segmentation import SegConfig, dp_optimal, dp_pruned, greedy_init
from jumpreg.smooth import PolyFit, RobustMatrices, fit_poly, robust_matrices, rss_floor, sigma_true_hat

if TYPE_CHECKING:
    from collections.abc import Sequence

AIC_FAMILY = "aic"
BIC_FAMILY = "bic"
CRITERIA = ("ajic", "aic-star", "bjic", "bic", "bjic-fine")
_FAMILY_OF = {"ajic": AIC_FAMILY, "aic-star": AIC_FAMILY, "bjic": BIC_FAMILY, "bic": BIC_FAMILY, "bjic-fine": BIC_FAMILY}
LOCAL_MEAN_WIDTH = 5


@dataclass(frozen=True)
class CriterionScore:
    """One scored candidate model.

    For the AIC family ``bias_or_penalty`` is the bias estimate ``b``; for the
    BIC family it is the subtracted penalty, and any refinement added on top
    is stored in ``extras["refinement"]``.
    """

    model_label: str
    family: str
    d_or_degree: int
    loglik_max: float
    bias_or_penalty: float
    score: float
    kind: str
    extras: dict = field(default_factory=dict)
    winner: bool = False

    def check(self, tol: float = 1e-9) -> None:
        """Verify the score identity for this row."""
        if self.kind == AIC_FAMILY:
            expected = 2 * self.loglik_max - 2 * self.bias_or_penalty
        else:
            expected = 2 * self.loglik_max - self.bias_or_penalty + self.extras.get("refinement", 0.0)
        if not math.isclose(self.score, expected, rel_tol=tol, abs_tol=tol):
            raise AssertionError(f"{self.model_label}: score {self.score} != {expected}")


def aic_score(loglik_max: float, b: float) -> float:
    return 2 * loglik_max - 2 * b


def bic_score(loglik_max: float, penalty: float) -> float:
    return 2 * loglik_max - penalty


def _jump_label(d: int) -> str:
    return f"jump-d{d}"


def _poly_label(degree: int) -> str:
    return f"poly-{degree}"


def _require_sigma0(sigma0: float) -> None:
    if not sigma0 > 0:
        raise DegenerateSigma("sigma0_hat is zero; floor the residual sum of squares first")


def ajic_star(
    fit: StepFit,
    sigma_true: float,
    lambdas: Sequence[float],
    c_pairs: Sequence[tuple[float, float]],
    reps: int = 1000,
    rng_seed: Seed = 0,
) -> CriterionScore:
    """Model-robust AIC-style score of a jump model.

    ``b = 1 + d * sigma^2 / sigma0^2 + sum_j kappa_j / sigma0^2`` where each
    ``kappa_j`` is simulated from the criterion process at break ``j`` with
    ``c_pairs[j] = (c1, c2)``.  Replicate ``r`` at break ``j`` draws from
    ``substream(rng_seed, j, r)``.
    """
    s0 = fit.sigma0_hat
    _require_sigma0(s0)
    nb = fit.d - 1
    if len(lambdas) != nb or len(c_pairs) != nb:
        raise InputError(f"need {nb} intensities and constant pairs, got {len(lambdas)} and {len(c_pairs)}")
    kappas, ses = [], []
    for j, (jump, lam, (c1, c2)) in enumerate(zip(np.abs(fit.jumps), lambdas, c_pairs)):
        p = MParams(sigma=sigma_true, jump_abs=float(jump), c_pos=float(c2), c_neg=float(c1), lam=float(lam))
        est = kappa_hat(p, reps, child_seed(rng_seed, j))
        kappas.append(est.value)
        ses.append(est.se)
    ratio = (sigma_true / s0) ** 2
    b = 1 + fit.d * ratio + math.fsum(kappas) / s0**2
    return CriterionScore(
        _jump_label(fit.d),
        "jump",
        fit.d,
        fit.loglik_max,
        b,
        aic_score(fit.loglik_max, b),
        AIC_FAMILY,
        {"sigma0_hat": s0, "sigma_hat": sigma_true, "kappa": kappas, "kappa_se": ses},
    )


def bjic(fit: StepFit) -> CriterionScore:
    """``2 * loglik_max - (3d - 1) * log n``."""
    logn = math.log(fit.n)
    pen = (3 * fit.d - 1) * logn
    return CriterionScore(
        _jump_label(fit.d),
        "jump",
        fit.d,
        fit.loglik_max,
        pen,
        bic_score(fit.loglik_max, pen),
        BIC_FAMILY,
        {"sigma0_hat": fit.sigma0_hat, "classical_bic_penalty": 2 * fit.d * logn},
    )


def bjic_finetuned(
    fit: StepFit,
    tau: float,
    window_probs: Sequence[float] | None = None,
    mus: Sequence[float] | None = None,
    *,
    lambdas: Sequence[float] | None = None,
    c_pairs: Sequence[tuple[float, float]] | None = None,
    reps: int = 1000,
    rng_seed: Seed = 0,
) -> CriterionScore:
    """BJIC with the second-order marginal-likelihood terms ``2 * (r1 + r2)``.

    ``r1 = (d+1)/2 log(2 pi) + (d+1) log sigma0 - log(2)/2 - sum log(F_j)/2
    + sum log(mu_j)`` and ``r2 = log Gamma(d) - d log(tau)``; the prior term
    for sigma is left out since it is nearly the same across models.

    ``window_probs`` defaults to the empirical window fractions.  Without
    ``mus`` each ``mu_j`` is simulated, which needs ``lambdas`` and optionally
    ``c_pairs`` (model-correct constants by default).
    """
    if not tau > 0:
        raise BadPrior("tau must be positive")
    d = fit.d
    s0 = fit.sigma0_hat
    _require_sigma0(s0)
    F = np.asarray(fit.counts, dtype=np.float64) / fit.n if window_probs is None else np.asarray(window_probs, float)
    if F.size != d or np.any(F <= 0) or F.sum() > 1 + 1e-9:
        raise BadPrior("window probabilities must be d positive numbers summing to at most one")
    mu_se: list[float] = []
    if mus is None:
        if d > 1 and lambdas is None:
            raise InputError("simulating mu_j needs the design intensities at the breaks")
        mus_l = []
        for j, jump in enumerate(np.abs(fit.jumps)):
            jump = float(jump)
            c1, c2 = (jump * jump, jump * jump) if c_pairs is None else c_pairs[j]
            p = MParams(sigma=s0, jump_abs=jump, c_pos=float(c2), c_neg=float(c1), lam=float(lambdas[j]))
            est = mu_hat(p, reps, child_seed(rng_seed, j))
            mus_l.append(est.value)
            mu_se.append(est.se)
        mu = np.array(mus_l)
    else:
        mu = np.asarray(mus, dtype=np.float64)
    if mu.size != d - 1 or np.any(mu <= 0):
        raise BadPrior("need d - 1 positive mu values")
    r1 = (
        0.5 * (d + 1) * math.log(2 * math.pi)
        + (d + 1) * math.log(s0)
        - 0.5 * math.log(2)
        - 0.5 * float(np.log(F).sum())
        + float(np.log(mu).sum())
    )
    r2 = math.lgamma(d) - d * math.log(tau)
    logn = math.log(fit.n)
    pen = (3 * d - 1) * logn
    ref = 2 * (r1 + r2)
    return CriterionScore(
        _jump_label(d),
        "jump",
        d,
        fit.loglik_max,
        pen,
        bic_score(fit.loglik_max, pen) + ref,
        BIC_FAMILY,
        {"sigma0_hat": s0, "r1": r1, "r2": r2, "refinement": ref, "mu": mu.tolist(), "mu_se": mu_se},
    )


def aic_star_smooth(fit: PolyFit, mats: RobustMatrices, sigma_true: float) -> CriterionScore:
    """``2 * loglik_max - 2 * (1 + sigma^2 / sigma0^2 * Tr{(Sigma + Omega)^-1 Sigma})``."""
    s0 = fit.sigma0_hat
    _require_sigma0(s0)
    b = 1 + (sigma_true / s0) ** 2 * mats.trace_term
    return CriterionScore(
        _poly_label(fit.degree),
        "polynomial",
        fit.degree,
        fit.loglik_max,
        b,
        aic_score(fit.loglik_max, b),
        AIC_FAMILY,
        {"sigma0_hat": s0, "sigma_hat": sigma_true, "classical_aic": aic_score(fit.loglik_max, 1 + fit.p)},
    )


def bic_smooth(fit: PolyFit) -> CriterionScore:
    """``2 * loglik_max - (p + 1) * log n``."""
    pen = (fit.p + 1) * math.log(fit.n)
    return CriterionScore(
        _poly_label(fit.degree),
        "polynomial",
        fit.degree,
        fit.loglik_max,
        pen,
        bic_score(fit.loglik_max, pen),
        BIC_FAMILY,
        {"sigma0_hat": fit.sigma0_hat},
    )


def fit_jump_models(data: Dataset, d_max: int, min_seg_len: int = 2) -> list[StepFit]:
    """Optimal fits for ``d = 1..d_max``, each DP warm-started by the greedy partition."""
    SegConfig(d_max, min_seg_len).check(data.n)
    fits = [dp_optimal(data, SegConfig(1, min_seg_len))]
    for d in range(2, d_max + 1):
        _, incumbent = greedy_init(data, d, min_seg_len)
        fit, _ = dp_pruned(data, SegConfig(d, min_seg_len, prune=True, incumbent_rss=incumbent))
        fits.append(fit)
    return fits


def local_c_pairs(data: Dataset, fit: StepFit, width: int = LOCAL_MEAN_WIDTH) -> list[tuple[float, float]]:
    """Drift constants at each break from local means of the adjacent observations.

    A non-positive constant is replaced by the squared jump, its value when
    the step model is correct.
    """
    out = []
    for j, k in enumerate(fit.splits):
        wl = min(width, fit.counts[j])
        wr = min(width, fit.counts[j + 1])
        ml = float(data.y[k - wl : k].mean())
        mr = float(data.y[k : k + wr].mean())
        a_l, a_r = float(fit.levels[j]), float(fit.levels[j + 1])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonPositiveCWarning)
            c1, c2, _ = c_constants(ml, mr, a_l, a_r)
        fallback = (a_r - a_l) ** 2
        out.append((c1 if c1 > 0 else fallback, c2 if c2 > 0 else fallback))
    return out


def _compare(a: CriterionScore, b: CriterionScore) -> int:
    # scores equal to rounding (jump-d1 and poly-0 are the same model) tie;
    # ties go to jump models, then to the smaller model
    if abs(a.score - b.score) > 1e-9 * max(1.0, abs(a.score), abs(b.score)):
        return -1 if a.score > b.score else 1
    ka = (a.family != "jump", a.d_or_degree)
    kb = (b.family != "jump", b.d_or_degree)
    return (ka > kb) - (ka < kb)


@dataclass(frozen=True)
class SelectionReport:
    """Ranked scores, the fitted candidates and any diagnostics raised on the way."""

    scores: list[CriterionScore]
    jump_fits: list[StepFit]
    poly_fits: list[PolyFit]
    sigma_hat: float | None
    criterion: str
    diagnostics: list[str]

    @property
    def winner(self) -> CriterionScore:
        return self.scores[0]


def select_models(
    data: Dataset,
    d_max: int,
    degree_max: int = 3,
    criterion: str = "ajic",
    min_seg_len: int = 2,
    reps: int = 1000,
    rng_seed: Seed = 0,
    *,
    tau: float | None = None,
    density: str = "uniform",
    sigma_method: str = "biggest-model",
) -> SelectionReport:
    """Fit jump models ``d = 1..d_max`` and polynomials ``0..degree_max`` and rank them.

    Monte Carlo draws for jump model ``d`` at break ``j`` come from
    ``substream(rng_seed, d, j, r)``.  A vanishing residual sum of squares is
    floored at ``1e-12 * max(1, sum y^2)`` and reported in the diagnostics.
    ``tau`` (for ``"bjic-fine"``) defaults to the range of ``y``.
    """
    if criterion not in CRITERIA:
        raise BadParam(f"criterion must be one of {CRITERIA}")
    if d_max < 1 or degree_max < -1:
        raise BadParam("d_max must be positive and degree_max at least -1")
    family = _FAMILY_OF[criterion]
    diagnostics: list[str] = []
    eps = rss_floor(data.y)

    jump_fits = []
    for fit in fit_jump_models(data, d_max, min_seg_len):
        if fit.rss <= eps:
            diagnostics.append(f"{_jump_label(fit.d)}: rss floored at {eps:.3g}")
            fit = fit.floored(eps)
        jump_fits.append(fit)
    ll = [f.loglik_max for f in jump_fits]
    if any(b < a - 1e-9 * max(1.0, abs(a)) for a, b in zip(ll, ll[1:])):
        diagnostics.append("log-likelihood maximum decreases in d")
        warnings.warn("log-likelihood maximum decreases in d", RuntimeWarning, stacklevel=2)

    poly_fits = []
    for deg in range(degree_max + 1):
        if data.n <= deg + 1:
            break
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateSigmaWarning)
            poly_fits.append(fit_poly(data, deg, floor=True))
        diagnostics.extend(f"{_poly_label(deg)}: {w.message}" for w in caught)
    for msg in diagnostics:
        if "floored" in msg:
            warnings.warn(msg, DegenerateSigmaWarning, stacklevel=2)

    scores: list[CriterionScore] = []
    sigma_hat = None
    if family == AIC_FAMILY:
        sigma_hat = sigma_true_hat([*jump_fits, *poly_fits], sigma_method, data)
        for fit in jump_fits:
            lam = list(design_density(data.x, fit.breakpoints, density)) if fit.d > 1 else []
            scores.append(ajic_star(fit, sigma_hat, lam, local_c_pairs(data, fit), reps, child_seed(rng_seed, fit.d)))
        for pf in poly_fits:
            scores.append(aic_star_smooth(pf, robust_matrices(pf, data), sigma_hat))
    else:
        if criterion == "bjic-fine":
            t = float(np.ptp(data.y)) if tau is None else tau
            if not t > 0:
                raise BadPrior("tau must be positive")
            for fit in jump_fits:
                lam = list(design_density(data.x, fit.breakpoints, density)) if fit.d > 1 else []
                scores.append(
                    bjic_finetuned(
                        fit,
                        t,
                        lambdas=lam,
                        c_pairs=local_c_pairs(data, fit),
                        reps=reps,
                        rng_seed=child_seed(rng_seed, fit.d),
                    )
                )
        else:
            scores.extend(bjic(fit) for fit in jump_fits)
        scores.extend(bic_smooth(pf) for pf in poly_fits)

    for s in scores:
        s.check()
    ranked = sorted(scores, key=cmp_to_key(_compare))
    if ranked:
        ranked[0] = replace(ranked[0], winner=True)
    return SelectionReport(ranked, jump_fits, poly_fits, sigma_hat, criterion, diagnostics)


def select(*args, **kwargs) -> list[CriterionScore]:
    """Ranked scores only; see :func:`select_models`."""
    return select_models(*args, **kwargs).scores
