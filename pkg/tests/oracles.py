"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate


def two_pass_sse(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    m = sum(v) / len(v)
    return float(sum((t - m) ** 2 for t in v))


def partition_sse(y, splits) -> float:
    edges = [0, *splits, len(y)]
    return sum(two_pass_sse(y[a:b]) for a, b in zip(edges[:-1], edges[1:]))


def enumerate_partitions(n: int, d: int, L: int):
    for combo in itertools.combinations(range(L, n - L + 1), d - 1):
        edges = (0, *combo, n)
        if all(b - a >= L for a, b in zip(edges[:-1], edges[1:])):
            yield combo


def normal_equations(x, y, degree):
    X = np.vander(np.asarray(x, float), degree + 1, increasing=True)
    return np.linalg.solve(X.T @ X, X.T @ y)


def gap_mass_by_quadrature(x, y, k, nodes=96):
    """Posterior mass of the gap after observation ``k`` (1-based) by numerical integration.

    The unnormalised posterior is ``sigma^-n exp(-Q / (2 sigma^2))`` with
    flat priors on both levels and ``log sigma`` and a uniform break; it is
    constant across the gap, so the mass is the gap length times the triple
    integral over ``a``, ``b`` and ``t = log sigma``.  The two levels use a
    Gauss-Legendre grid spanning 12 standard deviations either side of the
    window means, and ``t`` uses adaptive quadrature.  The integrand is
    scaled by its value at the joint optimum to stay in floating range.
    """
    y = np.asarray(y, float)
    n = y.size
    left, right = y[:k], y[k:]
    ma, mb = left.mean(), right.mean()
    rss = float(((left - ma) ** 2).sum() + ((right - mb) ** 2).sum())
    t_hat = 0.5 * math.log(rss / n)
    u, wu = np.polynomial.legendre.leggauss(nodes)
    u, wu = 12 * u, 12 * wu
    uu = u[:, None] ** 2 + u[None, :] ** 2
    ww = wu[:, None] * wu[None, :]
    ref = -n * t_hat - rss * math.exp(-2 * t_hat) / 2

    def over_levels(t):
        s = math.exp(t)
        # a = ma + s u / sqrt(k), b = mb + s v / sqrt(n - k)
        jac = s * s / math.sqrt(k * (n - k))
        vals = np.exp(-n * t - rss * math.exp(-2 * t) / 2 - uu / 2 - ref)
        return jac * float((ww * vals).sum())

    val, _ = integrate.quad(over_levels, t_hat - 4.0, t_hat + 8.0, epsabs=0, epsrel=1e-12, limit=200)
    gap = x[k] - x[k - 1]
    return math.log(gap) + math.log(val) + ref
