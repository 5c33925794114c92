"""equivax: best-equivariant and minimax estimation workbench.

Pitman location and scale estimators, the James-Stein Wishart covariance
estimator, their Gaussian-prior Bayes approximations, and Monte Carlo risk
experiments that exhibit constant risk, risk domination, and Bayes-risk
convergence to the minimax constant risk.
"""

from .errors import (
    DegenerateImportanceSampleWarning,
    EmptyMassError,
    NumericalFailure,
    ReplicateFailureError,
    ScheduleOverflowError,
    ToleranceFailureError,
)
from .model import (
    BUILTIN_TAGS,
    ENTROPY,
    LOCATION,
    SCALE,
    SQUARED_ERROR,
    STEIN,
    DensityFamily,
    LossSpec,
    builtin_family,
    entropy_loss,
    log_density,
    loss_eval,
    squared_error_loss,
    stein_loss,
)
from .pitman import (
    GaussianLocationPrior,
    LogNormalScalePrior,
    MultivariateLocationFamily,
    bayes_location_gaussian,
    bayes_scale_lognormal,
    pitman_location,
    pitman_location_multivariate,
    pitman_scale,
    shifted_bayes_location,
)
from .quad import (
    POSITIVE_HALF_LINE,
    REAL_LINE,
    Domain1D,
    QuadConfig,
    log_integral,
    log_integral_ratio,
)
from .risk import (
    COVARIANCE_PROBLEM,
    LOCATION_PROBLEM,
    SCALE_PROBLEM,
    ConstantRiskReport,
    RiskEstimate,
    SweepResult,
    bayes_risk,
    constant_risk_report,
    convergence_sweep,
    mc_risk,
)
from .wishart import (
    CovEstimate,
    KSchedule,
    LowerTriangular,
    MCConfig,
    WishartModel,
    XiVector,
    bayes_covariance_mc,
    cholesky,
    haar_left_log,
    haar_right_log,
    james_stein_constants,
    james_stein_constants_mc,
    james_stein_estimator,
    log_prior_xi,
    log_wishart_cholesky_density,
    mle_covariance,
    sample_bartlett,
    shifted_bayes_covariance,
    theta_from_scaled_omega,
    theta_to_xi,
    xi_to_theta,
)

__version__ = "0.1.0"
