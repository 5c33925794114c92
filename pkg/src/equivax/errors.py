"""Exception and warning types shared across the package."""


class NumericalFailure(Exception):
    """Base class for failures of the numerical machinery.

    The CLI maps these to exit code 3; validation problems raise
    plain ValueError instead.
    """


class EmptyMassError(NumericalFailure):
    """An integrand carried zero mass everywhere it was probed."""


class ToleranceFailureError(NumericalFailure):
    """The requested accuracy was not reached within the subdivision budget.

    The best available estimate is attached so callers can decide whether
    to proceed with a degraded value.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ScheduleOverflowError(NumericalFailure):
    """A k-schedule magnified an entry beyond double-precision range."""


class ReplicateFailureError(NumericalFailure):
    """An estimator failed on a Monte Carlo replicate.

    Carries the replicate index and master seed so the failure is
    reproducible in isolation.
    """

    def __init__(self, message, replicate, seed):
        super().__init__(f"replicate {replicate} (seed {seed}): {message}")
        self.replicate = replicate
        self.seed = seed


class DegenerateImportanceSampleWarning(UserWarning):
    """Effective sample size of an importance sample fell below the floor.

    The estimate is still returned; treat it as unreliable.
    """
