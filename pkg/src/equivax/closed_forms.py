"""Closed-form references for the built-in families.

These are the textbook reductions of the generalized Bayes formulas for the
specific built-in kernels.  They are deliberately kept out of the estimator
code paths: the estimators always run the generic quadrature/Monte Carlo
route, and these expressions serve as independent cross-checks in the test
suite, demos, and reports.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import digamma, gammaln


def gaussian_location_pitman(x):
    """Gaussian kernel: the flat-prior posterior mean reduces to the sample mean."""
    return float(np.mean(x))


def gaussian_location_conjugate(x, k):
    """Posterior mean under N(0, k^2): k^2 sum(x) / (n k^2 + 1)."""
    x = np.asarray(x, dtype=float)
    return float(k * k * np.sum(x) / (len(x) * k * k + 1.0))


def exponential_scale_pitman(x, c=1.0):
    """Exponential kernel: s^c Gamma(n) / Gamma(n + c) with s = sum(x).

    Both defining integrals are gamma integrals:
    int sigma^a exp(-s/sigma) dsigma = s^{a+1} Gamma(-a - 1); needs n + c > 0.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    s = float(np.sum(x))
    return math.exp(c * math.log(s) + gammaln(n) - gammaln(n + c))


def halfnormal_scale_pitman(x, c=1.0):
    """Half-normal kernel: (q/2)^{c/2} Gamma(n/2) / Gamma((n+c)/2), q = sum(x^2)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    q = float(np.sum(x * x))
    return math.exp(
        0.5 * c * math.log(q / 2.0) + gammaln(n / 2.0) - gammaln((n + c) / 2.0)
    )


def gaussian_location_minimax_risk(n):
    """Constant risk of the sample mean under squared error: 1/n."""
    return 1.0 / n


def gaussian_location_bayes_risk(n, k):
    """Conjugate Bayes risk (posterior variance): k^2 / (n k^2 + 1)."""
    return k * k / (n * k * k + 1.0)


def gaussian_location_gap(n, k):
    """R0 - r_k for the Gaussian location problem: 1 / (n (n k^2 + 1))."""
    return 1.0 / (n * (n * k * k + 1.0))


def exponential_scale_minimax_risk(n):
    """Entropy-loss risk of s/n at sigma = 1: log n - digamma(n).

    E[s/n] = 1 and E[log s] = digamma(n) for s ~ Gamma(n, 1).
    """
    return math.log(n) - float(digamma(n))


def wishart_minimax_risk(n, p):
    """Stein-loss risk of the best-equivariant covariance estimator.

    sum_i [log(n + p - 2i + 1) - log 2 - digamma((n - i + 1)/2)], from the
    chi-square log-moments of the Bartlett diagonal.
    """
    i = np.arange(1, p + 1)
    return float(
        np.sum(np.log(n + p - 2 * i + 1) - math.log(2.0) - digamma((n - i + 1) / 2.0))
    )


def wishart_mle_risk(n, p):
    """Stein-loss risk of V/n: sum_i [log n - log 2 - digamma((n - i + 1)/2)]."""
    i = np.arange(1, p + 1)
    return float(
        np.sum(math.log(n) - math.log(2.0) - digamma((n - i + 1) / 2.0))
    )
