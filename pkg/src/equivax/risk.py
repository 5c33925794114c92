"""Monte Carlo frequentist and Bayes risk estimation.

Replicates are driven by per-replicate substreams keyed on (seed, index)
through numpy's SeedSequence, so results are independent of how replicates
are partitioned across workers; the reduction is numpy's pairwise summation
over the index-ordered loss array.  Identical seeds therefore give
bit-identical estimates for any worker count.

The convergence sweeps couple the replicates across k (common random
numbers): each replicate draws its standardized data once plus a unit-scale
coefficient vector omega, and the k-th prior draw is the schedule-scaled
transform of the same omega.  The best-equivariant reference risk is
computed by `mc_risk` with the same seed, which consumes the identical data
substreams, so the reported gaps are paired differences with far less
variance than the individual risks.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, ReplicateFailureError
from .model import LOCATION, DensityFamily, LossSpec, loss_eval
from .pitman import (
    GaussianLocationPrior,
    LogNormalScalePrior,
    bayes_location_gaussian,
    bayes_scale_lognormal,
    pitman_location,
    pitman_scale,
)
from .wishart import (
    KSchedule,
    LowerTriangular,
    MCConfig,
    WishartModel,
    XiVector,
    _packed_size,
    bayes_covariance_mc,
    james_stein_estimator,
    sample_bartlett,
    theta_from_scaled_omega,
    tri_inv,
)

LOCATION_PROBLEM = "location"
SCALE_PROBLEM = "scale"
COVARIANCE_PROBLEM = "covariance"

CSV_HEADER = ("problem", "k", "estimator", "reps", "seed", "risk", "stderr")


@dataclass(frozen=True)
class RiskEstimate:
    """Monte Carlo risk with its standard error and provenance."""

    mean: float
    std_error: float
    replications: int
    seed: int
    problem: str

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("need at least 2 replications")


@dataclass(frozen=True)
class SweepResult:
    """Bayes risks r_k along a k-schedule plus the constant-risk reference."""

    problem: str
    ks: tuple
    estimates: tuple  # RiskEstimate per surviving k, aligned with ks
    reference: RiskEstimate  # R0 of the best-equivariant estimator
    failures: tuple  # (k, message) pairs for k values that failed

    @property
    def gaps(self):
        """R0 - r_k per surviving k."""
        return tuple(self.reference.mean - e.mean for e in self.estimates)

    def combined_se(self, i):
        """Conservative standard error of the i-th gap (ignores coupling)."""
        return math.hypot(self.reference.std_error, self.estimates[i].std_error)


@dataclass(frozen=True)
class ConstantRiskReport:
    """Risks at several truths with flags for pairs that disagree."""

    problem: str
    truths: tuple
    estimates: tuple
    flagged: tuple  # (i, j, |difference|, 4 * combined se) for flagged pairs

    @property
    def ok(self):
        return not self.flagged


def _replicate_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _problem_of(model):
    if isinstance(model, WishartModel):
        return COVARIANCE_PROBLEM
    if isinstance(model, DensityFamily):
        return LOCATION_PROBLEM if model.kind == LOCATION else SCALE_PROBLEM
    raise ValueError("model must be a DensityFamily or WishartModel")


def _draw_standardized(model, rng):
    """Draw at the canonical truth (mu=0 / sigma=1 / Sigma=I)."""
    if isinstance(model, WishartModel):
        return sample_bartlett(WishartModel.identity(model.n, model.p), rng)
    if model.sampler is None:
        raise ValueError("family has no sampler; Monte Carlo risk needs one")
    return model.sampler(rng)


def _apply_truth(model, truth, std_draw):
    if isinstance(model, WishartModel):
        chol = truth if isinstance(truth, LowerTriangular) else None
        if chol is not None:
            return LowerTriangular.from_matrix(chol.matrix @ std_draw.matrix)
        sig = np.asarray(truth, dtype=float)
        if np.array_equal(sig, np.eye(model.p)):
            return std_draw
        c = np.linalg.cholesky(sig)
        return LowerTriangular.from_matrix(c @ std_draw.matrix)
    if model.kind == LOCATION:
        return std_draw + truth
    return std_draw * truth


def _run_indexed(fn, reps, workers):
    """Evaluate fn(index) for 0..reps-1, partitioned but order-preserving."""
    if workers <= 1:
        return np.array([fn(i) for i in range(reps)])

    def chunk(bounds):
        lo, hi = bounds
        return np.array([fn(i) for i in range(lo, hi)])

    edges = np.linspace(0, reps, workers + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(chunk, zip(edges[:-1], edges[1:])))
    return np.concatenate(parts)


def _estimate_from_losses(losses, seed, problem):
    reps = len(losses)
    return RiskEstimate(
        mean=float(np.sum(losses) / reps),
        std_error=float(np.std(losses, ddof=1) / math.sqrt(reps)),
        replications=reps,
        seed=int(seed),
        problem=problem,
    )


def mc_risk(estimator, truth, model, loss, reps, seed, workers=1):
    """Frequentist risk of an estimator at a fixed truth.

    Draws ``reps`` samples at the truth and averages
    ``loss_eval(estimator(sample), truth)``.  Deterministic per seed and
    independent of ``workers``.  A failing replicate aborts with its index
    and the master seed attached.
    """
    if reps < 100:
        raise ValueError("need at least 100 replications")
    problem = _problem_of(model)
    loss_truth = truth.matrix @ truth.matrix.T if isinstance(
        truth, LowerTriangular
    ) else truth

    def one(i):
        rng = _replicate_rng(seed, i)
        sample = _apply_truth(model, truth, _draw_standardized(model, rng))
        try:
            est = estimator(sample)
            return loss_eval(loss, est, loss_truth)
        except NumericalFailure as exc:
            raise ReplicateFailureError(str(exc), i, seed) from exc

    losses = _run_indexed(one, reps, workers)
    return _estimate_from_losses(losses, seed, problem)


def bayes_risk(estimator, prior_sampler, model, loss, reps, seed, workers=1):
    """Bayes risk: parameters drawn from the prior, then data at each draw.

    ``prior_sampler(rng)`` must return a truth in the same form `mc_risk`
    accepts (a scalar, or a Sigma matrix for covariance problems).
    """
    if reps < 100:
        raise ValueError("need at least 100 replications")
    problem = _problem_of(model)

    def one(i):
        rng = _replicate_rng(seed, i)
        truth = prior_sampler(rng)
        sample = _apply_truth(model, truth, _draw_standardized(model, rng))
        loss_truth = truth.matrix @ truth.matrix.T if isinstance(
            truth, LowerTriangular
        ) else truth
        try:
            est = estimator(sample)
            return loss_eval(loss, est, loss_truth)
        except NumericalFailure as exc:
            raise ReplicateFailureError(str(exc), i, seed) from exc

    losses = _run_indexed(one, reps, workers)
    return _estimate_from_losses(losses, seed, problem)


def constant_risk_report(estimator, truths, model, loss, reps, seed, workers=1):
    """Risks at several truths, flagging pairs beyond 4 combined s.e.

    Common random numbers are deliberately disabled: each truth gets an
    independent substream derived from (seed, truth index), so agreement is
    evidence of constant risk rather than of shared noise.
    """
    if len(truths) < 2:
        raise ValueError("need at least 2 truths")
    estimates = []
    for idx, truth in enumerate(truths):
        child = int(
            np.random.SeedSequence([int(seed), 9973, idx]).generate_state(1)[0]
        )
        estimates.append(
            mc_risk(estimator, truth, model, loss, reps, child, workers)
        )
    flagged = []
    for i in range(len(truths)):
        for j in range(i + 1, len(truths)):
            diff = abs(estimates[i].mean - estimates[j].mean)
            limit = 4.0 * math.hypot(
                estimates[i].std_error, estimates[j].std_error
            )
            if diff > limit:
                flagged.append((i, j, diff, limit))
    return ConstantRiskReport(
        problem=_problem_of(model),
        truths=tuple(truths),
        estimates=tuple(estimates),
        flagged=tuple(flagged),
    )


def _guarded_build(k_list, builder):
    built, failed = {}, {}
    for k in k_list:
        try:
            built[k] = builder(k)
        except ValueError as exc:
            failed[k] = str(exc)
    return built, failed


def _sweep_location(family, loss, k_list, reps, seed, quad_cfg):
    losses = {k: [] for k in k_list}
    priors, failed = _guarded_build(k_list, GaussianLocationPrior)
    for i in range(reps):
        rng = _replicate_rng(seed, i)
        z = _draw_standardized(family, rng)
        w = rng.standard_normal()
        for k in k_list:
            if k in failed:
                continue
            mu = k * w
            try:
                est = bayes_location_gaussian(family, z + mu, priors[k], quad_cfg)
            except NumericalFailure as exc:
                failed[k] = f"replicate {i}: {exc}"
                continue
            losses[k].append(loss_eval(loss, est, mu))
    return losses, failed


def _sweep_scale(family, loss, k_list, reps, seed, quad_cfg):
    losses = {k: [] for k in k_list}
    priors, failed = _guarded_build(k_list, LogNormalScalePrior)
    for i in range(reps):
        rng = _replicate_rng(seed, i)
        l = _draw_standardized(family, rng)
        w = rng.standard_normal()
        for k in k_list:
            if k in failed:
                continue
            sigma = math.exp(k * w)
            try:
                est = bayes_scale_lognormal(family, sigma * l, priors[k], 1.0, quad_cfg)
            except NumericalFailure as exc:
                failed[k] = f"replicate {i}: {exc}"
                continue
            losses[k].append(loss_eval(loss, est, sigma))
    return losses, failed


def _stein_loss_theta(delta, theta_mat, p):
    m = theta_mat @ delta @ theta_mat.T
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise ValueError("estimate must be positive definite")
    return float(np.trace(m) - logdet - p)


def _sweep_covariance(model, loss, k_list, reps, seed, draws, quad_cfg):
    p = model.p
    m = _packed_size(p)
    losses = {k: [] for k in k_list}
    scheds, failed = _guarded_build(k_list, KSchedule)
    for i in range(reps):
        rng = _replicate_rng(seed, i)
        t0 = _draw_standardized(model, rng)
        w = XiVector(p, rng.standard_normal(m))
        mc_seeds = rng.integers(0, 2**63 - 1, size=len(k_list))
        for k, mc_seed in zip(k_list, mc_seeds):
            if k in failed:
                continue
            try:
                theta = theta_from_scaled_omega(w, scheds[k])
                t = LowerTriangular.from_matrix(tri_inv(theta.matrix) @ t0.matrix)
                # likelihood proposal keeps the ESS near the draw count even
                # when the sampled truth is far out in the diffuse prior
                est = bayes_covariance_mc(
                    t, model.n, scheds[k], MCConfig(draws, int(mc_seed)),
                    proposal="likelihood",
                )
                losses[k].append(
                    _stein_loss_theta(est.matrix, theta.matrix, p)
                )
            except NumericalFailure as exc:
                failed[k] = f"replicate {i}: {exc}"
    return losses, failed


def convergence_sweep(
    model, loss, k_list, reps, seed, draws=1000, workers=1, quad_cfg=None
):
    """Bayes risks r_k along increasing k, with the constant-risk reference.

    Per-k Bayes estimators are quadrature-based for location/scale and
    importance-sampled (``draws`` prior draws per replicate) for covariance.
    The reference R0 is `mc_risk` of the best-equivariant estimator at the
    canonical truth with the same seed, which shares the data substreams
    (common random numbers), so gaps are paired.  Failed k values are
    reported and skipped; the sweep continues.
    """
    k_list = [float(k) for k in k_list]
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("k values must be strictly increasing")
    if reps < 100:
        raise ValueError("need at least 100 replications")
    problem = _problem_of(model)

    if problem == LOCATION_PROBLEM:
        reference = mc_risk(
            lambda x: pitman_location(model, x, quad_cfg),
            0.0, model, loss, reps, seed, workers,
        )
        losses, failed = _sweep_location(model, loss, k_list, reps, seed, quad_cfg)
    elif problem == SCALE_PROBLEM:
        reference = mc_risk(
            lambda x: pitman_scale(model, x, 1.0, quad_cfg),
            1.0, model, loss, reps, seed, workers,
        )
        losses, failed = _sweep_scale(model, loss, k_list, reps, seed, quad_cfg)
    else:
        reference = mc_risk(
            lambda t: james_stein_estimator(t, model.n),
            np.eye(model.p), model, loss, reps, seed, workers,
        )
        losses, failed = _sweep_covariance(
            model, loss, k_list, reps, seed, draws, quad_cfg
        )

    ks, estimates = [], []
    for k in k_list:
        if k in failed:
            continue
        ks.append(k)
        estimates.append(
            _estimate_from_losses(np.asarray(losses[k]), seed, problem)
        )
    return SweepResult(
        problem=problem,
        ks=tuple(ks),
        estimates=tuple(estimates),
        reference=reference,
        failures=tuple(sorted(failed.items())),
    )


def risk_row(estimate, estimator_label, k=""):
    """One CSV row in the fixed problem,k,estimator,reps,seed,risk,stderr schema."""
    return {
        "problem": estimate.problem,
        "k": "" if k == "" else repr(float(k)),
        "estimator": estimator_label,
        "reps": estimate.replications,
        "seed": estimate.seed,
        "risk": repr(estimate.mean),
        "stderr": repr(estimate.std_error),
    }


def sweep_rows(sweep, reference_label, sweep_label="bayes-k"):
    rows = [risk_row(sweep.reference, reference_label)]
    for k, est in zip(sweep.ks, sweep.estimates):
        rows.append(risk_row(est, sweep_label, k=k))
    return rows


def write_csv(path, rows):
    """Write risk rows; float fields use repr so reruns are bit-identical."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def sweep_json_dict(sweep, reference_label, sweep_label="bayes-k"):
    return {
        "problem": sweep.problem,
        "reference": {
            "estimator": reference_label,
            "risk": sweep.reference.mean,
            "stderr": sweep.reference.std_error,
            "reps": sweep.reference.replications,
            "seed": sweep.reference.seed,
        },
        "sweep": [
            {
                "k": k,
                "estimator": sweep_label,
                "risk": est.mean,
                "stderr": est.std_error,
                "gap": sweep.reference.mean - est.mean,
                "combined_stderr": sweep.combined_se(i),
            }
            for i, (k, est) in enumerate(zip(sweep.ks, sweep.estimates))
        ],
        "failures": [{"k": k, "message": msg} for k, msg in sweep.failures],
    }
