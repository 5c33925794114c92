"""Bayes-risk convergence: the numerical signature of minimaxity.

For each problem the best-equivariant estimator has constant risk R0, and
the Bayes risks r_k of the Gaussian-prior rules climb toward R0 from below
as the priors flatten.  Watching the gap R0 - r_k shrink along k is the
Monte Carlo counterpart of the least-favorable-prior argument.

Small replication counts keep this demo quick; the acceptance suite runs
the same sweeps at full budget.
"""

import numpy as np

from equivax import (
    WishartModel,
    builtin_family,
    constant_risk_report,
    convergence_sweep,
    entropy_loss,
    pitman_location,
    squared_error_loss,
    stein_loss,
)
from equivax.closed_forms import gaussian_location_gap

REPS = 4000


def show(sweep, title, extra=None):
    ref = sweep.reference
    print(f"--- {title} ---")
    print(f"R0 = {ref.mean:.5f} (stderr {ref.std_error:.5f}, reps {ref.replications})")
    for i, k in enumerate(sweep.ks):
        line = (f"k = {k:5.1f}: r_k = {sweep.estimates[i].mean:.5f}"
                f"   gap = {sweep.gaps[i]:+.5f}")
        if extra is not None:
            line += f"   {extra(k)}"
        print(line)
    print()


print("=== Constant risk first: the location Pitman rule, three truths ===")
fam = builtin_family("gaussian-iid", 2)
report = constant_risk_report(
    lambda x: pitman_location(fam, x), [-5.0, 0.0, 3.0], fam,
    squared_error_loss(), REPS, 3,
)
for truth, est in zip(report.truths, report.estimates):
    print(f"mu = {truth:5.1f}: risk {est.mean:.4f} (stderr {est.std_error:.4f})")
print("agrees within 4 combined stderr:", report.ok)
print()

sweep = convergence_sweep(
    builtin_family("gaussian-iid", 1), squared_error_loss(),
    [1.0, 2.0, 4.0, 8.0], REPS, 5,
)
show(sweep, "Gaussian location, n = 1",
     extra=lambda k: f"exact gap 1/(k^2+1) = {gaussian_location_gap(1, k):.5f}")

sweep = convergence_sweep(
    builtin_family("exponential-iid", 3), entropy_loss(), [1.0, 2.0, 4.0], REPS, 7,
)
show(sweep, "Exponential scale, n = 3")

sweep = convergence_sweep(
    WishartModel.identity(4, 1), stein_loss(1), [2.0, 5.0, 10.0], REPS, 9,
    draws=2000,
)
show(sweep, "Wishart covariance, p = 1, n = 4")
