"""Control-variate Monte Carlo for SDEs with a conditioned parabolic coarse scheme.

A fine-step scheme (Euler-Maruyama or SRA1) is paired with a coarse-step
scheme driven by a piecewise parabolic Brownian approximation whose
coefficients are conditioned on the fine Gaussian inputs.  The package also
provides the budget-optimal choice of steps and sample sizes, benchmark
models, reference oracles and an experiment harness.
"""

__version__ = "0.1.0"

from .budget import (
    BudgetPlan,
    RatePair,
    grid_minimize,
    optimize_cv,
    optimize_cv_eps,
    optimize_standard,
    plan_from_exponents,
    theoretical_error,
)
from .estimators import (
    Conditioning,
    Estimate,
    EstimatorConfig,
    Level,
    cv_estimate,
    cv_estimate_opt_lambda,
    mlmc_estimate,
    standard_mc,
)
from .gaussians import (
    FineGaussians,
    ParabolaCoeffs,
    Provenance,
    WHPair,
    condition_on_increments,
    condition_on_increments_and_areas,
    parabola_eval,
    parabola_unconditioned,
    sample_fine,
)
from .models import double_well_model, get_model, igbm_model, mean_revert_model, sinh_model
from .schemes import (
    Primary,
    SdeProblem,
    Secondary,
    euler_maruyama,
    igbm_parabola_step,
    milstein,
    parabola_rk_step,
    parabola_scheme,
    sra1,
)
