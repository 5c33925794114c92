"""Tests for density families and loss functions."""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from equivax.model import (
    BUILTIN_TAGS,
    DensityFamily,
    builtin_family,
    entropy_loss,
    log_density,
    loss_eval,
    squared_error_loss,
    stein_loss,
)


class TestLossEval:
    def test_squared_error_example(self):
        assert loss_eval(squared_error_loss(), 3.0, 1.0) == pytest.approx(4.0)

    def test_entropy_identity(self):
        assert loss_eval(entropy_loss(), 7.0, 7.0) == 0.0

    def test_stein_scalar_example(self):
        got = loss_eval(stein_loss(1), 2.0, 1.0)
        assert got == pytest.approx(2.0 - math.log(2.0) - 1.0, abs=1e-12)
        assert got == pytest.approx(0.306853, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            loss_eval(squared_error_loss(), np.zeros(2), np.zeros(3))
        with pytest.raises(ValueError):
            loss_eval(stein_loss(2), np.eye(2), np.eye(3))

    def test_entropy_rejects_nonpositive_estimate(self):
        with pytest.raises(ValueError):
            loss_eval(entropy_loss(), -1.0, 2.0)
        with pytest.raises(ValueError):
            loss_eval(entropy_loss(), 1.0, 0.0)

    def test_stein_rejects_non_positive_definite(self):
        with pytest.raises(ValueError):
            loss_eval(stein_loss(2), np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))
        with pytest.raises(ValueError):
            loss_eval(stein_loss(2), np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_loss_spec_validation(self):
        with pytest.raises(ValueError):
            stein_loss(0)
        with pytest.raises(ValueError):
            # only stein takes a dimension
            from equivax.model import LossSpec

            LossSpec("entropy", p=2)


class TestLossProperties:
    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            d, m = rng.normal(size=2)
            val = loss_eval(squared_error_loss(), d, m)
            assert val >= 0.0
            assert (val == 0.0) == (d == m)

            s = rng.uniform(0.1, 10.0)
            d = rng.uniform(0.1, 10.0)
            val = loss_eval(entropy_loss(), d, s)
            assert val >= 0.0
            assert loss_eval(entropy_loss(), s, s) == 0.0

            a = rng.normal(size=(2, 2))
            delta = a @ a.T + 0.1 * np.eye(2)
            b = rng.normal(size=(2, 2))
            sigma = b @ b.T + 0.1 * np.eye(2)
            val = loss_eval(stein_loss(2), delta, sigma)
            assert val >= 0.0
            assert loss_eval(stein_loss(2), sigma, sigma) == pytest.approx(0.0, abs=1e-12)

    def test_entropy_scale_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            d, s = rng.uniform(0.2, 5.0, size=2)
            c = rng.uniform(0.01, 100.0)
            assert loss_eval(entropy_loss(), c * d, c * s) == pytest.approx(
                loss_eval(entropy_loss(), d, s), abs=1e-12
            )

    def test_stein_triangular_invariance(self):
        # loss(A d A', A S A') == loss(d, S) for lower-triangular A > 0 diag
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = int(rng.integers(1, 4))
            a = np.tril(rng.normal(size=(p, p)))
            np.fill_diagonal(a, np.abs(np.diag(a)) + 0.5)
            q = rng.normal(size=(p, p))
            delta = q @ q.T + 0.2 * np.eye(p)
            r = rng.normal(size=(p, p))
            sigma = r @ r.T + 0.2 * np.eye(p)
            base = loss_eval(stein_loss(p), delta, sigma)
            moved = loss_eval(stein_loss(p), a @ delta @ a.T, a @ sigma @ a.T)
            assert moved == pytest.approx(base, abs=1e-12 * max(1.0, base))


class TestFamilies:
    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            builtin_family("cauchy-iid", 3)

    def test_kind_assignment(self):
        assert builtin_family("gaussian-iid", 2).kind == "location"
        assert builtin_family("exponential-iid", 2).kind == "scale"

    def test_log_density_examples(self):
        g1 = builtin_family("gaussian-iid", 1)
        assert log_density(g1, np.array([0.0]), 0.0) == pytest.approx(
            -0.5 * math.log(2 * math.pi), abs=1e-12
        )
        e2 = builtin_family("exponential-iid", 2)
        assert log_density(e2, np.array([1.0, 1.0]), 1.0) == pytest.approx(-2.0)
        e1 = builtin_family("exponential-iid", 1)
        assert log_density(e1, np.array([-1.0]), 1.0) == -np.inf

    def test_scale_density_rejects_nonpositive_sigma(self):
        e1 = builtin_family("exponential-iid", 1)
        with pytest.raises(ValueError):
            log_density(e1, np.array([1.0]), 0.0)

    def test_kernel_off_support_is_neg_inf(self):
        u2 = builtin_family("uniform01-iid", 2)
        assert u2.log_kernel(np.array([0.5, 1.5])) == -np.inf
        h1 = builtin_family("halfnormal-iid", 1)
        assert h1.log_kernel(np.array([-0.2])) == -np.inf

    @pytest.mark.parametrize("tag", BUILTIN_TAGS)
    @pytest.mark.parametrize("n", [1, 2])
    def test_kernels_integrate_to_one(self, tag, n):
        fam = builtin_family(tag, n)
        lo = 0.0 if fam.support != "all-of-rn" else -40.0
        hi = 1.0 if fam.support == "unit-box" else 40.0
        if n == 1:
            val = quad(
                lambda z: math.exp(fam.log_kernel(np.array([z]))), lo, hi, limit=200
            )[0]
        else:
            val = dblquad(
                lambda y, x: math.exp(fam.log_kernel(np.array([x, y]))),
                lo, hi, lo, hi,
            )[0]
        assert val == pytest.approx(1.0, rel=1e-6)

    def test_samplers_match_kernels(self):
        # first two moments of each sampler against quadrature of the kernel
        rng = np.random.default_rng(11)
        for tag in BUILTIN_TAGS:
            fam = builtin_family(tag, 1)
            lo = 0.0 if fam.support != "all-of-rn" else -40.0
            hi = 1.0 if fam.support == "unit-box" else 40.0
            mean = quad(
                lambda z: z * math.exp(fam.log_kernel(np.array([z]))), lo, hi
            )[0]
            draws = np.array([fam.sampler(rng)[0] for _ in range(40000)])
            assert draws.mean() == pytest.approx(
                mean, abs=4.0 * draws.std() / 200.0
            ), tag

    def test_family_validation(self):
        with pytest.raises(ValueError):
            DensityFamily("rotation", 1, lambda z: 0.0, "all-of-rn")
        with pytest.raises(ValueError):
            DensityFamily("location", 0, lambda z: 0.0, "all-of-rn")
        with pytest.raises(ValueError):
            DensityFamily("location", 1, lambda z: 0.0, "banana")
