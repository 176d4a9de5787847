"""SIR coverage of cellular-connected aerial users.

Analytic coverage under a LoS-ball blockage model with Nakagami/Rayleigh
fading, a coverage-maximizing density estimator, and an independent Monte
Carlo simulator that every analytic result is validated against.
"""

from .coverage import (
    CoverageResult,
    ToeplitzCoeffs,
    cond_cov_los,
    cond_cov_nlos,
    coverage_probability,
    log_laplace_los,
    log_laplace_nlos,
    nlos_interference_factor,
    toeplitz_coeffs,
    toeplitz_exp_l1,
)
from .density import (
    DensityOptimum,
    DensityPolynomial,
    a_of_u,
    beta_coeffs,
    default_density_grid,
    integrand_identity_gap,
    kappa_n,
    lambda_lower_bound,
    lambda_star_grid,
)
from .errors import (
    ConfigError,
    NonConvergenceError,
    NoRootError,
    NumericalError,
    PoleError,
    UavcovError,
)
from .mc import (
    BallLos,
    LosModel,
    McEstimate,
    ProbabilisticLos,
    SimWindow,
    TrialResult,
    classify,
    default_window,
    elevation_logistic,
    estimate_coverage,
    sample_gain,
    sample_ppp,
    simulate_trials,
    trial,
)
from .model import (
    ChannelParams,
    LinkClass,
    LosRadiusMap,
    NetworkConfig,
    assoc_prob,
    delta_exponent,
    los_radius_at,
    path_loss,
    serving_dist_pdf,
)
from .special import (
    QuadratureRule,
    gauss_legendre,
    hyp2f1_nonpos,
    inc_beta_cont,
    ln_gamma,
    lower_inc_gamma,
    quad_fixed,
)
from .validate import reference_config

__version__ = "0.1.0"
