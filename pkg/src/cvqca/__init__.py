"""Simulation, learning and analysis tools for continuous-variable phase compilation."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    CvqcaError,
    InvalidParameterError,
    NoPhysicalRootError,
    StudyError,
)
from .gaussian_model import (  # noqa: E402
    ModelParams,
    diff_quadrature_variance,
    homodyne_quadratic_form,
    marginal_diff_density,
    tmss_covariance,
    wigner_marginal_oracle,
)
from .landscape import cost, landscape_sweep, normalized_cost, seeded_cost  # noqa: E402
from .homodyne import CostEstimate, HomodyneTrace, cost_evaluator  # noqa: E402
from .qca import QcaConfig, QcaRunRecord, qca_run  # noqa: E402
from .estimation import FitResult, aic, fit_cost_model, solve_r  # noqa: E402
