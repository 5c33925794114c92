"""Density families, samplers, and loss functions for the three problems.

A location family has density f(x - mu) on R^n; a scale family has density
sigma^{-n} f(x / sigma).  Families are described by a log-density kernel
``log f(z)`` so that n-fold product kernels (magnitudes around e^{-1e4} for
n >= 20) never underflow.  Kernels must be vectorized: they accept arrays of
shape (..., n) and return shape (...), with -inf off the declared support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

LOCATION = "location"
SCALE = "scale"

SUPPORT_REAL = "all-of-rn"
SUPPORT_POSITIVE = "positive-orthant"
SUPPORT_UNIT_BOX = "unit-box"

SQUARED_ERROR = "squared-error"
ENTROPY = "entropy"
STEIN = "stein"

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DensityFamily:
    """A location or scale family on R^n defined by a log-density kernel.

    Parameters
    ----------
    kind : {"location", "scale"}
    n : int
        Sample dimension.
    log_kernel : callable
        Vectorized map from z with shape (..., n) to log f(z), -inf off
        support.  exp(log_kernel) must integrate to 1 over the support.
    support : str
        One of the SUPPORT_* descriptors; quadrature and samplers rely on it
        being declared rather than inferred.
    tag : str, optional
        Built-in tag when the family came from `builtin_family`.
    sampler : callable, optional
        ``sampler(rng) -> (n,) array`` drawing from f itself (the
        standardized member: mu = 0 or sigma = 1).  Required for Monte Carlo
        risk experiments; generic kernels may omit it.
    kinked : bool
        Whether log f can have kinks at the data values under a location
        shift (true for Laplace-type kernels).  Location quadrature pins
        breakpoints at the sample values when set.  Defaults to True, the
        safe choice for unknown kernels.

    Built-in families have finite second moments, so the Pitman formulas
    below are well defined for them; the generic kernel interface gives no
    such guarantee.
    """

    kind: str
    n: int
    log_kernel: Callable
    support: str
    tag: str | None = None
    sampler: Callable | None = None
    kinked: bool = True

    def __post_init__(self):
        if self.kind not in (LOCATION, SCALE):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.support not in (SUPPORT_REAL, SUPPORT_POSITIVE, SUPPORT_UNIT_BOX):
            raise ValueError(f"unknown support descriptor {self.support!r}")
        if self.n < 1:
            raise ValueError("n must be a positive integer")


def _gaussian_kernel(n):
    c = -0.5 * n * _LOG_2PI

    def log_kernel(z):
        z = np.asarray(z, dtype=float)
        return c - 0.5 * np.sum(z * z, axis=-1)

    return log_kernel


def _laplace_kernel(n):
    c = -n * math.log(2.0)

    def log_kernel(z):
        z = np.asarray(z, dtype=float)
        return c - np.sum(np.abs(z), axis=-1)

    return log_kernel


def _uniform01_kernel(n):
    def log_kernel(z):
        z = np.asarray(z, dtype=float)
        inside = np.all((z >= 0.0) & (z <= 1.0), axis=-1)
        return np.where(inside, 0.0, -np.inf)

    return log_kernel


def _exponential_kernel(n):
    def log_kernel(z):
        z = np.asarray(z, dtype=float)
        pos = np.all(z > 0.0, axis=-1)
        with np.errstate(invalid="ignore"):
            val = -np.sum(z, axis=-1)
        return np.where(pos, val, -np.inf)

    return log_kernel


def _halfnormal_kernel(n):
    c = 0.5 * n * math.log(2.0 / math.pi)

    def log_kernel(z):
        z = np.asarray(z, dtype=float)
        pos = np.all(z > 0.0, axis=-1)
        return np.where(pos, c - 0.5 * np.sum(z * z, axis=-1), -np.inf)

    return log_kernel


# tag -> (kind, kernel factory, support, sampler factory, kinked)
_BUILTINS = {
    "gaussian-iid": (
        LOCATION,
        _gaussian_kernel,
        SUPPORT_REAL,
        lambda n: (lambda rng: rng.standard_normal(n)),
        False,
    ),
    "laplace-iid": (
        LOCATION,
        _laplace_kernel,
        SUPPORT_REAL,
        lambda n: (lambda rng: rng.laplace(size=n)),
        True,
    ),
    "uniform01-iid": (
        LOCATION,
        _uniform01_kernel,
        SUPPORT_UNIT_BOX,
        lambda n: (lambda rng: rng.random(n)),
        False,
    ),
    "exponential-iid": (
        SCALE,
        _exponential_kernel,
        SUPPORT_POSITIVE,
        lambda n: (lambda rng: rng.exponential(size=n)),
        False,
    ),
    "halfnormal-iid": (
        SCALE,
        _halfnormal_kernel,
        SUPPORT_POSITIVE,
        lambda n: (lambda rng: np.abs(rng.standard_normal(n))),
        False,
    ),
}

BUILTIN_TAGS = tuple(_BUILTINS)


def builtin_family(tag, n):
    """Construct a built-in iid family by string tag.

    Tags: gaussian-iid, laplace-iid, uniform01-iid (location);
    exponential-iid, halfnormal-iid (scale).
    """
    if tag not in _BUILTINS:
        raise ValueError(
            f"unknown family tag {tag!r}; expected one of {sorted(_BUILTINS)}"
        )
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    kind, kernel_factory, support, sampler_factory, kinked = _BUILTINS[tag]
    return DensityFamily(
        kind=kind,
        n=n,
        log_kernel=kernel_factory(n),
        support=support,
        tag=tag,
        sampler=sampler_factory(n),
        kinked=kinked,
    )


def log_density(family, x, theta):
    """Log density of the sample x at location mu or scale sigma.

    Location: log f(x - mu).  Scale: -n log sigma + log f(x / sigma).
    Returns -inf off the support; raises for sigma <= 0.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (family.n,):
        raise ValueError(f"sample must have shape ({family.n},), got {x.shape}")
    if family.kind == LOCATION:
        return float(family.log_kernel(x - theta))
    if not theta > 0:
        raise ValueError("scale parameter must be positive")
    return float(-family.n * math.log(theta) + family.log_kernel(x / theta))


@dataclass(frozen=True)
class LossSpec:
    """One of the three invariant losses.

    squared-error: (d - m)^2 for location (sum of squares for vectors).
    entropy: d/s - log(d/s) - 1 for scale.
    stein: tr(S^-1 d) - log|S^-1 d| - p for covariance (needs p).
    """

    tag: str
    p: int | None = None

    def __post_init__(self):
        if self.tag not in (SQUARED_ERROR, ENTROPY, STEIN):
            raise ValueError(f"unknown loss tag {self.tag!r}")
        if self.tag == STEIN:
            if self.p is None or self.p < 1:
                raise ValueError("stein loss requires a positive dimension p")
        elif self.p is not None:
            raise ValueError(f"{self.tag} loss takes no dimension")


def squared_error_loss():
    return LossSpec(SQUARED_ERROR)


def entropy_loss():
    return LossSpec(ENTROPY)


def stein_loss(p):
    return LossSpec(STEIN, p=int(p))


def _as_spd(mat, p, name):
    a = np.atleast_2d(np.asarray(mat, dtype=float))
    if a.shape != (p, p):
        raise ValueError(f"{name} must be {p}x{p}, got {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None
    return a


def loss_eval(loss, estimate, truth):
    """Evaluate a loss; exactly zero when estimate equals truth.

    Stein-loss truths and estimates may be given as scalars when p = 1.
    """
    if loss.tag == SQUARED_ERROR:
        d = np.asarray(estimate, dtype=float)
        m = np.asarray(truth, dtype=float)
        if d.shape != m.shape:
            raise ValueError("estimate and truth dimensions disagree")
        return float(np.sum((d - m) ** 2))

    if loss.tag == ENTROPY:
        d = float(estimate)
        s = float(truth)
        if not s > 0:
            raise ValueError("entropy loss needs a positive true scale")
        if not d > 0:
            raise ValueError("nonpositive scale estimate under entropy loss")
        r = d / s
        return float(r - math.log(r) - 1.0)

    p = loss.p
    delta = _as_spd(estimate, p, "estimate")
    sigma = _as_spd(truth, p, "truth")
    a = np.linalg.solve(sigma, delta)
    sign, logdet = np.linalg.slogdet(a)
    if sign <= 0:
        raise ValueError("estimate must be positive definite")
    return float(np.trace(a) - logdet - p)
