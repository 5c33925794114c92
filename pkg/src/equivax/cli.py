"""Configuration-driven experiment runner.

Subcommands: estimate-location, estimate-scale, estimate-cov, risk,
bayes-risk, sweep, check.  Every flag can also be supplied through a JSON
config file (``--config``); explicit flags override config values.  The
seed falls back to the EQUIVAX_SEED environment variable, then 0.

Exit codes: 0 success, 2 validation error, 3 numerical failure (empty
mass, schedule overflow, or a degenerate importance sample under
``--strict``).  ``check`` exits 1 when a statistical check is flagged.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .errors import NumericalFailure
from .model import (
    LOCATION,
    builtin_family,
    entropy_loss,
    loss_eval,
    squared_error_loss,
    stein_loss,
)
from .pitman import (
    GaussianLocationPrior,
    LogNormalScalePrior,
    bayes_location_gaussian,
    bayes_scale_lognormal,
    pitman_location,
    pitman_scale,
)
from .quad import QuadConfig
from .risk import (
    COVARIANCE_PROBLEM,
    LOCATION_PROBLEM,
    SCALE_PROBLEM,
    bayes_risk,
    constant_risk_report,
    convergence_sweep,
    mc_risk,
    risk_row,
    sweep_json_dict,
    sweep_rows,
    write_csv,
)
from .wishart import (
    KSchedule,
    LowerTriangular,
    MCConfig,
    WishartModel,
    bayes_covariance_mc,
    cholesky,
    james_stein_estimator,
    mle_covariance,
    sample_bartlett,
)

_PROBLEMS = (LOCATION_PROBLEM, SCALE_PROBLEM, COVARIANCE_PROBLEM)
_ESTIMATORS = ("pitman", "bayes-k", "sigma0", "mle")
_DEFAULT_REPS = {LOCATION_PROBLEM: 100_000, SCALE_PROBLEM: 100_000, COVARIANCE_PROBLEM: 10_000}


class CliError(ValueError):
    """Validation problem; message names the offending field."""


def _parse_data(value, column=None):
    """Inline comma list, or a CSV file path (optionally --data-column)."""
    if value is None:
        raise CliError("field 'data' is required")
    try:
        return np.array([float(v) for v in str(value).split(",")])
    except ValueError:
        pass
    if not os.path.exists(value):
        raise CliError(f"field 'data': not a number list and not a file: {value!r}")
    with open(value, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise CliError(f"field 'data': empty CSV file {value!r}")
    col = column or list(rows[0])[0]
    if col not in rows[0]:
        raise CliError(f"field 'data-column': no column {col!r} in {value!r}")
    return np.array([float(r[col]) for r in rows])


def _parse_matrix(text, field):
    try:
        mat = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise CliError(f"field {field!r}: invalid JSON matrix: {exc}") from None
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise CliError(f"field {field!r}: expected a square matrix")
    return mat


def _parse_k_list(text):
    try:
        ks = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise CliError("field 'k': expected a comma list of numbers") from None
    if not ks:
        raise CliError("field 'k': empty list")
    return ks


def _seed_of(ns):
    if ns.seed is not None:
        return int(ns.seed)
    env = os.environ.get("EQUIVAX_SEED")
    return int(env) if env else 0


def _quad_cfg(ns):
    return QuadConfig(
        rel_tol=ns.rel_tol, max_subdivisions=ns.max_subdivisions, window=ns.window
    )


def _family_of(ns, kind):
    if ns.family is None:
        raise CliError("field 'family' is required")
    if ns.n is None:
        raise CliError("field 'n' is required")
    fam = builtin_family(ns.family, ns.n)
    if fam.kind != kind:
        raise CliError(f"field 'family': {ns.family} is a {fam.kind} family")
    return fam


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file; flags override its values")
    sp.add_argument("--seed", type=int, default=None,
                    help="RNG seed (fallback: EQUIVAX_SEED, then 0)")
    sp.add_argument("--rel-tol", type=float, default=1e-10,
                    help="quadrature relative tolerance")
    sp.add_argument("--max-subdivisions", type=int, default=2000,
                    help="quadrature panel budget")
    sp.add_argument("--window", type=float, default=12.0,
                    help="quadrature window half-width in standardized units")
    sp.add_argument("--strict", action="store_true",
                    help="treat degenerate importance samples as failures (exit 3)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="equivax",
        description="Best-equivariant estimators and minimax risk experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate-location", help="Pitman or Gaussian-prior location estimate")
    sp.add_argument("--family", help="location family tag, e.g. gaussian-iid")
    sp.add_argument("--data", help="comma list of values, or a CSV file path")
    sp.add_argument("--data-column", help="column name when --data is a CSV file")
    sp.add_argument("--n", type=int, default=None, help="sample dimension (default: len(data))")
    sp.add_argument("--k", type=float, default=None,
                    help="Gaussian prior scale; omit for the Pitman (flat-prior) estimate")
    _add_common(sp)

    sp = sub.add_parser("estimate-scale", help="Pitman or log-normal-prior scale estimate")
    sp.add_argument("--family", help="scale family tag, e.g. exponential-iid")
    sp.add_argument("--data", help="comma list of values, or a CSV file path")
    sp.add_argument("--data-column")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--c", type=float, default=1.0, help="estimate sigma^c (default 1)")
    sp.add_argument("--k", type=float, default=None,
                    help="log-normal prior scale; omit for the Pitman estimate")
    _add_common(sp)

    sp = sub.add_parser("estimate-cov", help="covariance estimate from V or its factor T")
    sp.add_argument("--n", type=int, help="Wishart degrees of freedom")
    sp.add_argument("--v", help="JSON symmetric positive-definite matrix")
    sp.add_argument("--t", help='JSON factor {"p": p, "packed": [...]}')
    sp.add_argument("--estimator", choices=("sigma0", "mle", "bayes-k"), default="sigma0")
    sp.add_argument("--k", type=float, default=None, help="prior schedule scale for bayes-k")
    sp.add_argument("--draws", type=int, default=1000, help="importance draws for bayes-k")
    _add_common(sp)

    for name, descr in (
        ("risk", "Monte Carlo frequentist risk at a fixed truth"),
        ("bayes-risk", "Monte Carlo Bayes risk under the k-indexed prior"),
    ):
        sp = sub.add_parser(name, help=descr)
        sp.add_argument("--problem", choices=_PROBLEMS)
        sp.add_argument("--family", help="family tag (location/scale problems)")
        sp.add_argument("--n", type=int)
        sp.add_argument("--p", type=int, default=None, help="dimension (covariance only)")
        sp.add_argument("--estimator", choices=_ESTIMATORS, default=None)
        sp.add_argument("--k", type=float, default=None, help="prior scale for bayes-k")
        sp.add_argument("--truth", type=float, default=None,
                        help="true mu or sigma (location/scale; defaults 0 / 1)")
        sp.add_argument("--truth-v", default=None,
                        help="true Sigma as a JSON matrix (covariance; default identity)")
        sp.add_argument("--reps", type=int, default=None,
                        help="replications (default 100000, covariance 10000)")
        sp.add_argument("--draws", type=int, default=1000)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", help="CSV output path")
        sp.add_argument("--json-out", help="JSON output path")
        _add_common(sp)

    sp = sub.add_parser("sweep", help="Bayes-risk convergence sweep over k")
    sp.add_argument("--problem", choices=_PROBLEMS)
    sp.add_argument("--family")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--k", help="comma list of increasing prior scales")
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--draws", type=int, default=1000)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", help="CSV output path")
    sp.add_argument("--json-out", help="JSON output path")
    _add_common(sp)

    sp = sub.add_parser("check", help="constant-risk and equivariance reports")
    sp.add_argument("--problem", choices=_PROBLEMS)
    sp.add_argument("--family")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--truths", default=None,
                    help="comma list of truths (location/scale problems)")
    sp.add_argument("--reps", type=int, default=2000)
    sp.add_argument("--cases", type=int, default=25,
                    help="randomized equivariance cases")
    sp.add_argument("--workers", type=int, default=1)
    _add_common(sp)

    return parser


def _apply_config(ns, argv):
    if not getattr(ns, "config", None):
        return ns
    try:
        with open(ns.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"field 'config': cannot read {ns.config!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError("field 'config': top level must be a JSON object")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(ns, dest):
            raise CliError(f"field 'config': unknown key {key!r}")
        flag = "--" + key.replace("_", "-")
        if flag not in argv:  # explicit flags win over config values
            setattr(ns, dest, value)
    return ns


def _cov_input(ns):
    if ns.n is None:
        raise CliError("field 'n' is required")
    if (ns.v is None) == (ns.t is None):
        raise CliError("exactly one of 'v' or 't' is required")
    if ns.v is not None:
        return cholesky(_parse_matrix(ns.v, "v"))
    try:
        return LowerTriangular.from_json_dict(json.loads(ns.t))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"field 't': {exc}") from None


def _print_matrix(mat):
    print(json.dumps([[float(v) for v in row] for row in mat]))


def _cmd_estimate_location(ns):
    data = _parse_data(ns.data, ns.data_column)
    fam = builtin_family(ns.family, ns.n or len(data)) if ns.family else None
    if fam is None:
        raise CliError("field 'family' is required")
    if fam.kind != LOCATION:
        raise CliError(f"field 'family': {ns.family} is not a location family")
    cfg = _quad_cfg(ns)
    if ns.k is None:
        value = pitman_location(fam, data, cfg)
    else:
        value = bayes_location_gaussian(fam, data, GaussianLocationPrior(ns.k), cfg)
    print(f"{value:.12g}")
    return 0


def _cmd_estimate_scale(ns):
    data = _parse_data(ns.data, ns.data_column)
    fam = _family_of(
        argparse.Namespace(family=ns.family, n=ns.n or len(data)), "scale"
    )
    cfg = _quad_cfg(ns)
    if ns.k is None:
        value = pitman_scale(fam, data, ns.c, cfg)
    else:
        value = bayes_scale_lognormal(fam, data, LogNormalScalePrior(ns.k), ns.c, cfg)
    print(f"{value:.12g}")
    return 0


def _cmd_estimate_cov(ns):
    t = _cov_input(ns)
    if ns.estimator == "sigma0":
        _print_matrix(james_stein_estimator(t, ns.n))
        return 0
    if ns.estimator == "mle":
        _print_matrix(mle_covariance(t, ns.n))
        return 0
    if ns.k is None:
        raise CliError("field 'k' is required for estimator bayes-k")
    est = bayes_covariance_mc(t, ns.n, KSchedule(ns.k), MCConfig(ns.draws, _seed_of(ns)))
    if est.degenerate and ns.strict:
        print(f"error: degenerate importance sample (ess {est.ess:.1f})", file=sys.stderr)
        return 3
    _print_matrix(est.matrix)
    print(f"ess {est.ess:.1f} of {est.draws}", file=sys.stderr)
    return 0


def _risk_setup(ns):
    """(model, loss, estimator callable, truth, label) for risk commands."""
    if ns.problem is None:
        raise CliError("field 'problem' is required")
    cfg = _quad_cfg(ns)
    seed = _seed_of(ns)
    if ns.problem == COVARIANCE_PROBLEM:
        if ns.p is None or ns.n is None:
            raise CliError("fields 'p' and 'n' are required for covariance")
        model = WishartModel.identity(ns.n, ns.p)
        loss = stein_loss(ns.p)
        truth = (
            _parse_matrix(ns.truth_v, "truth-v")
            if ns.truth_v is not None
            else np.eye(ns.p)
        )
        tag = ns.estimator or "sigma0"
        if tag == "sigma0":
            est = lambda t: james_stein_estimator(t, ns.n)
        elif tag == "mle":
            est = lambda t: mle_covariance(t, ns.n)
        elif tag == "bayes-k":
            if ns.k is None:
                raise CliError("field 'k' is required for estimator bayes-k")
            sched = KSchedule(ns.k)
            est = lambda t: bayes_covariance_mc(
                t, ns.n, sched, MCConfig(ns.draws, seed), proposal="likelihood"
            ).matrix
        else:
            raise CliError(f"field 'estimator': {tag} not valid for covariance")
        return model, loss, est, truth, tag
    if ns.p is not None:
        raise CliError("field 'p' only applies to the covariance problem")
    kind = "location" if ns.problem == LOCATION_PROBLEM else "scale"
    fam = _family_of(ns, kind)
    tag = ns.estimator or "pitman"
    if ns.problem == LOCATION_PROBLEM:
        loss = squared_error_loss()
        truth = 0.0 if ns.truth is None else ns.truth
        if tag == "pitman":
            est = lambda x: pitman_location(fam, x, cfg)
        elif tag == "bayes-k":
            if ns.k is None:
                raise CliError("field 'k' is required for estimator bayes-k")
            prior = GaussianLocationPrior(ns.k)
            est = lambda x: bayes_location_gaussian(fam, x, prior, cfg)
        else:
            raise CliError(f"field 'estimator': {tag} not valid for location")
    else:
        loss = entropy_loss()
        truth = 1.0 if ns.truth is None else ns.truth
        if tag == "pitman":
            est = lambda x: pitman_scale(fam, x, 1.0, cfg)
        elif tag == "bayes-k":
            if ns.k is None:
                raise CliError("field 'k' is required for estimator bayes-k")
            prior = LogNormalScalePrior(ns.k)
            est = lambda x: bayes_scale_lognormal(fam, x, prior, 1.0, cfg)
        else:
            raise CliError(f"field 'estimator': {tag} not valid for scale")
    return fam, loss, est, truth, tag


def _emit_estimate(ns, estimate, label, k=""):
    print(
        f"problem={estimate.problem} estimator={label} risk={estimate.mean:.6g} "
        f"stderr={estimate.std_error:.3g} reps={estimate.replications} "
        f"seed={estimate.seed}"
    )
    if ns.out:
        write_csv(ns.out, [risk_row(estimate, label, k=k)])
    if ns.json_out:
        with open(ns.json_out, "w") as fh:
            json.dump(
                {
                    "problem": estimate.problem,
                    "estimator": label,
                    "k": None if k == "" else float(k),
                    "risk": estimate.mean,
                    "stderr": estimate.std_error,
                    "reps": estimate.replications,
                    "seed": estimate.seed,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")


def _cmd_risk(ns):
    model, loss, est, truth, tag = _risk_setup(ns)
    reps = ns.reps or _DEFAULT_REPS[ns.problem]
    out = mc_risk(est, truth, model, loss, reps, _seed_of(ns), ns.workers)
    _emit_estimate(ns, out, tag, k="" if ns.k is None else ns.k)
    return 0


def _cmd_bayes_risk(ns):
    model, loss, est, _, tag = _risk_setup(ns)
    if ns.k is None:
        raise CliError("field 'k' is required for bayes-risk")
    if ns.problem == LOCATION_PROBLEM:
        prior = GaussianLocationPrior(ns.k)
        sampler = lambda rng: prior.sample(rng)
    elif ns.problem == SCALE_PROBLEM:
        prior = LogNormalScalePrior(ns.k)
        sampler = lambda rng: prior.sample(rng)
    else:
        sched = KSchedule(ns.k)

        def sampler(rng, p=model.p, sched=sched):
            from .wishart import XiVector, theta_from_scaled_omega, tri_inv

            w = XiVector(p, rng.standard_normal(p * (p + 1) // 2))
            theta = theta_from_scaled_omega(w, sched)
            inv_theta = tri_inv(theta.matrix)
            return inv_theta @ inv_theta.T

    reps = ns.reps or _DEFAULT_REPS[ns.problem]
    out = bayes_risk(est, sampler, model, loss, reps, _seed_of(ns), ns.workers)
    _emit_estimate(ns, out, tag, k=ns.k)
    return 0


def _cmd_sweep(ns):
    if ns.problem is None:
        raise CliError("field 'problem' is required")
    if ns.k is None:
        raise CliError("field 'k' is required")
    ks = _parse_k_list(ns.k)
    reps = ns.reps or _DEFAULT_REPS[ns.problem]
    seed = _seed_of(ns)
    cfg = _quad_cfg(ns)
    if ns.problem == COVARIANCE_PROBLEM:
        if ns.p is None or ns.n is None:
            raise CliError("fields 'p' and 'n' are required for covariance")
        model = WishartModel.identity(ns.n, ns.p)
        loss = stein_loss(ns.p)
        ref_label = "sigma0"
    else:
        kind = "location" if ns.problem == LOCATION_PROBLEM else "scale"
        model = _family_of(ns, kind)
        loss = squared_error_loss() if kind == "location" else entropy_loss()
        ref_label = "pitman"
    sweep = convergence_sweep(
        model, loss, ks, reps, seed, draws=ns.draws, workers=ns.workers, quad_cfg=cfg
    )
    ref = sweep.reference
    print(
        f"problem={sweep.problem} R0={ref.mean:.6g} stderr={ref.std_error:.3g} "
        f"reps={ref.replications} seed={ref.seed}"
    )
    for i, (k, est) in enumerate(zip(sweep.ks, sweep.estimates)):
        print(
            f"k={k:g} risk={est.mean:.6g} stderr={est.std_error:.3g} "
            f"gap={sweep.gaps[i]:.6g}"
        )
    for k, msg in sweep.failures:
        print(f"k={k:g} failed: {msg}", file=sys.stderr)
    if ns.out:
        write_csv(ns.out, sweep_rows(sweep, ref_label))
    if ns.json_out:
        with open(ns.json_out, "w") as fh:
            json.dump(sweep_json_dict(sweep, ref_label), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if sweep.failures and ns.strict:
        return 3
    return 0


def _check_equivariance(ns, problem, model, cfg, rng):
    """Randomized equivariance spot checks; returns list of (name, ok)."""
    out = []
    if problem == LOCATION_PROBLEM:
        worst = 0.0
        for _ in range(ns.cases):
            x = model.sampler(rng)
            a = rng.uniform(-100, 100)
            d = abs(
                pitman_location(model, x + a, cfg) - pitman_location(model, x, cfg) - a
            )
            worst = max(worst, d)
        out.append((f"location shift equivariance (worst {worst:.2e})", worst <= 1e-8))
    elif problem == SCALE_PROBLEM:
        worst = 0.0
        for _ in range(ns.cases):
            x = model.sampler(rng)
            c = math.exp(rng.uniform(math.log(0.1), math.log(50.0)))
            base = pitman_scale(model, x, 1.0, cfg)
            d = abs(pitman_scale(model, c * x, 1.0, cfg) - c * base) / (c * base)
            worst = max(worst, d)
        out.append((f"scale equivariance (worst rel {worst:.2e})", worst <= 1e-8))
    else:
        worst = 0.0
        for _ in range(ns.cases):
            t = sample_bartlett(model, rng)
            a = np.tril(rng.standard_normal((model.p, model.p)))
            np.fill_diagonal(a, np.abs(np.diag(a)) + 0.5)
            lhs = james_stein_estimator(a @ t.matrix, model.n)
            rhs = a @ james_stein_estimator(t, model.n) @ a.T
            d = float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs))))
            worst = max(worst, d)
        out.append((f"triangular-group equivariance (worst rel {worst:.2e})", worst <= 1e-12))
    return out


def _cmd_check(ns):
    if ns.problem is None:
        raise CliError("field 'problem' is required")
    cfg = _quad_cfg(ns)
    seed = _seed_of(ns)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    if ns.problem == COVARIANCE_PROBLEM:
        if ns.p is None or ns.n is None:
            raise CliError("fields 'p' and 'n' are required for covariance")
        model = WishartModel.identity(ns.n, ns.p)
        loss = stein_loss(ns.p)
        est = lambda t: james_stein_estimator(t, ns.n)
        truths = [
            np.eye(ns.p),
            np.diag(np.linspace(9.0, 1.0, ns.p)),
            np.eye(ns.p) + 0.5 * (np.ones((ns.p, ns.p)) - np.eye(ns.p)),
        ]
    else:
        kind = "location" if ns.problem == LOCATION_PROBLEM else "scale"
        model = _family_of(ns, kind)
        if ns.truths is not None:
            truths = [float(v) for v in str(ns.truths).split(",")]
        else:
            truths = [-5.0, 0.0, 3.0] if kind == "location" else [0.1, 1.0, 20.0]
        if kind == "location":
            loss = squared_error_loss()
            est = lambda x: pitman_location(model, x, cfg)
        else:
            loss = entropy_loss()
            est = lambda x: pitman_scale(model, x, 1.0, cfg)
    report = constant_risk_report(est, truths, model, loss, ns.reps, seed, ns.workers)
    results = [("constant risk across truths", report.ok)]
    for i, e in enumerate(report.estimates):
        print(f"truth[{i}]: risk={e.mean:.6g} stderr={e.std_error:.3g}")
    for i, j, diff, limit in report.flagged:
        print(f"flagged: truths {i} and {j} differ by {diff:.4g} > {limit:.4g}")
    results.extend(_check_equivariance(ns, ns.problem, model, cfg, rng))
    failed = False
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}: {name}")
        failed = failed or not ok
    return 1 if failed else 0


_COMMANDS = {
    "estimate-location": _cmd_estimate_location,
    "estimate-scale": _cmd_estimate_scale,
    "estimate-cov": _cmd_estimate_cov,
    "risk": _cmd_risk,
    "bayes-risk": _cmd_bayes_risk,
    "sweep": _cmd_sweep,
    "check": _cmd_check,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        ns = _apply_config(ns, argv)
        return _COMMANDS[ns.command](ns)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
