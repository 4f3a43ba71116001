"""Hierarchical Gaussian process regression and its convergence laboratory.

Subpackages cover Matern-family kernels, design-point generation with
geometry diagnostics, plug-in GP regression, empirical-Bayes hyper-parameter
estimation, synthetic test functions of controlled smoothness, empirical
convergence-rate studies, and GP-accelerated Bayesian inverse problems.
"""

from hiergp.kernels import (
    ConditioningError,
    KernelSpec,
    MaternParams,
    MeanSpec,
    SepMaternParams,
    bessel_k,
    kernel_matrix,
    matern,
    matern_eval,
    matern_spectral_density,
    mean_eval,
    separable_matern,
    sepmatern_eval,
)
from hiergp.designs import (
    DesignSet,
    GeometryDiagnostics,
    SparseGridSpec,
    clenshaw_curtis,
    geometry,
    halton,
    nested_uniform,
    smolyak_grid,
    uniform_grid,
)
from hiergp.regression import (
    FittedGP,
    RkhsFunction,
    fit,
    interpolant_norm,
    predict_cov,
    predict_mean,
    predict_var,
    rkhs_norm,
    sample_process,
)
from hiergp.hyperfit import (
    EstimationError,
    EstimationResult,
    HyperBox,
    ParamBounds,
    estimate,
    log_marginal_likelihood,
    profile_sigma2,
)
from hiergp.testbed import (
    ErrorReport,
    error_norms,
    make_sine_series,
    make_tensor_sine_series,
    spectral_norm,
)
from hiergp.convergence import (
    DesignFamily,
    RateFit,
    StudyConfig,
    TheoremRate,
    fit_rate,
    predicted_rate_matern,
    predicted_rate_separable,
    run_study,
    sup_error_study,
)
from hiergp.inverse import (
    InverseProblem,
    PosteriorApprox,
    QuadratureGrid,
    SweepConfig,
    approx_density,
    hellinger_on_grid,
    make_forward,
    posterior_error_sweep,
    potential,
    quadrature_grid,
    reference_posterior,
    rwm_sampler,
)

__all__ = [
    "ConditioningError",
    "KernelSpec",
    "MaternParams",
    "MeanSpec",
    "SepMaternParams",
    "bessel_k",
    "kernel_matrix",
    "matern",
    "matern_eval",
    "matern_spectral_density",
    "mean_eval",
    "separable_matern",
    "sepmatern_eval",
    "DesignSet",
    "GeometryDiagnostics",
    "SparseGridSpec",
    "clenshaw_curtis",
    "geometry",
    "halton",
    "nested_uniform",
    "smolyak_grid",
    "uniform_grid",
    "FittedGP",
    "RkhsFunction",
    "fit",
    "interpolant_norm",
    "predict_cov",
    "predict_mean",
    "predict_var",
    "rkhs_norm",
    "sample_process",
    "EstimationError",
    "EstimationResult",
    "HyperBox",
    "ParamBounds",
    "estimate",
    "log_marginal_likelihood",
    "profile_sigma2",
    "ErrorReport",
    "error_norms",
    "make_sine_series",
    "make_tensor_sine_series",
    "spectral_norm",
    "DesignFamily",
    "RateFit",
    "StudyConfig",
    "TheoremRate",
    "fit_rate",
    "predicted_rate_matern",
    "predicted_rate_separable",
    "run_study",
    "sup_error_study",
    "InverseProblem",
    "PosteriorApprox",
    "QuadratureGrid",
    "SweepConfig",
    "approx_density",
    "hellinger_on_grid",
    "make_forward",
    "posterior_error_sweep",
    "potential",
    "quadrature_grid",
    "reference_posterior",
    "rwm_sampler",
]

__version__ = "0.1.0"
