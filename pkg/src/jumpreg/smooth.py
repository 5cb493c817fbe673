"""Polynomial competitor models and the model-robust correction matrices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.polynomial import Polynomial

from jumpreg.core import Dataset, StepFit, loglik_from_rss
from jumpreg.errors import BadParam, DegenerateSigma, DegenerateSigmaWarning, InputError, RankDeficient

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

MAX_DEGREE = 5
RANK_TOL = 1e-10


def rss_floor(y: ArrayLike) -> float:
    """Smallest residual sum of squares treated as nondegenerate."""
    y = np.asarray(y, dtype=np.float64)
    return 1e-12 * max(1.0, float(y @ y))


@dataclass(frozen=True)
class PolyFit:
    """Least-squares polynomial of a given degree; ``theta`` in the raw monomial basis."""

    degree: int
    theta: NDArray[np.float64]
    rss: float
    n: int
    rss_floored: bool = False

    @property
    def p(self) -> int:
        return self.degree + 1

    @property
    def sigma0_hat(self) -> float:
        return math.sqrt(self.rss / self.n)

    @property
    def loglik_max(self) -> float:
        return loglik_from_rss(self.rss, self.n)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        return Polynomial(self.theta)(np.asarray(x, dtype=np.float64))


def _scaled_x(x: NDArray[np.float64]) -> tuple[NDArray[np.float64], tuple[float, float]]:
    lo, hi = float(x.min()), float(x.max())
    return (2 * x - (lo + hi)) / (hi - lo), (lo, hi)


def fit_poly(data: Dataset, degree: int, *, floor: bool = False) -> PolyFit:
    """OLS polynomial fit through a QR factorisation of a rescaled monomial basis.

    A zero residual sum of squares raises :class:`DegenerateSigma` unless
    ``floor`` is set, in which case it is raised to :func:`rss_floor` with a
    warning.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise BadParam(f"degree must lie in 0..{MAX_DEGREE}")
    if data.n <= degree + 1:
        raise InputError(f"degree {degree} needs more than {degree + 1} observations")
    t, (lo, hi) = _scaled_x(data.x)
    X = np.vander(t, degree + 1, increasing=True)
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_TOL * diag.max():
        raise RankDeficient(f"design for degree {degree} is numerically singular")
    beta = np.linalg.solve(R, Q.T @ data.y)
    resid = data.y - X @ beta
    rss = float(resid @ resid)
    theta = Polynomial(beta, domain=[lo, hi], window=[-1, 1]).convert().coef
    theta = np.pad(theta, (0, degree + 1 - theta.size))
    floored = False
    eps = rss_floor(data.y)
    if rss <= eps:
        if not floor:
            raise DegenerateSigma(f"residuals vanish for degree {degree}; log sigma0 undefined")
        warnings.warn(f"rss of degree-{degree} fit floored at {eps:.3g}", DegenerateSigmaWarning, stacklevel=2)
        rss, floored = eps, True
    return PolyFit(degree, theta, rss, data.n, floored)


@dataclass(frozen=True)
class RobustMatrices:
    Sigma: NDArray[np.float64]
    Omega: NDArray[np.float64]
    trace_term: float


def robust_matrices(fit: PolyFit, data: Dataset, omega: ArrayLike | None = None) -> RobustMatrices:
    """``Sigma = n^-1 sum b(x_i) b(x_i)^T`` and ``Tr{(Sigma + Omega)^-1 Sigma}``.

    ``omega`` defaults to zero, as for any model linear in its parameters; then
    the trace is exactly ``p``.  A supplied matrix is used for models with
    curvature in the mean function.
    """
    B = np.vander(data.x, fit.p, increasing=True)
    Sigma = B.T @ B / data.n
    if np.linalg.cond(Sigma) * RANK_TOL > 1:
        raise RankDeficient("Sigma is numerically singular")
    if omega is None:
        return RobustMatrices(Sigma, np.zeros_like(Sigma), float(fit.p))
    Omega = np.asarray(omega, dtype=np.float64)
    if Omega.shape != Sigma.shape:
        raise InputError(f"Omega must be {Sigma.shape}, got {Omega.shape}")
    trace = float(np.trace(np.linalg.solve(Sigma + Omega, Sigma)))
    return RobustMatrices(Sigma, Omega, trace)


def _running_mean(y: NDArray[np.float64], width: int) -> NDArray[np.float64]:
    n = y.size
    half_lo = (width - 1) // 2
    idx = np.arange(n)
    lo = np.clip(idx - half_lo, 0, n)
    hi = np.clip(lo + width, 0, n)
    lo = np.maximum(hi - width, 0)
    cs = np.concatenate(([0.0], np.cumsum(y)))
    return (cs[hi] - cs[lo]) / (hi - lo)


def sigma_true_hat(
    candidates: Sequence[StepFit | PolyFit],
    method: str = "biggest-model",
    data: Dataset | None = None,
) -> float:
    """Estimate of the true noise level shared by all robust criteria.

    ``"biggest-model"`` takes the smallest ``sigma0_hat`` among jump models
    with the largest window count (or among all candidates when there are no
    jump models).  ``"smoother"`` uses residuals about a running mean of
    ``ceil(n**0.8 / 4)`` observations and needs ``data``.
    """
    if method == "smoother":
        if data is None:
            raise InputError("the smoother estimate needs the data")
        width = max(1, math.ceil(data.n**0.8 / 4))
        resid = data.y - _running_mean(data.y, width)
        s = math.sqrt(float(resid @ resid) / data.n)
    elif method == "biggest-model":
        if not candidates:
            raise InputError("no candidate models")
        jumps = [c for c in candidates if isinstance(c, StepFit)]
        if jumps:
            top = max(c.d for c in jumps)
            pool = [c for c in jumps if c.d == top]
        else:
            pool = list(candidates)
        s = min(c.sigma0_hat for c in pool)
    else:
        raise BadParam(f"unknown method {method!r}")
    if s <= 0:
        raise DegenerateSigma("estimated noise level is zero")
    return s
