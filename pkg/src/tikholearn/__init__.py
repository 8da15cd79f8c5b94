"""Learning the Tikhonov regularisation parameter from an empirical signal subspace."""

from .errors import (
    ConfigError,
    DecompositionError,
    DegenerateOperatorError,
    EmptyDataError,
    InvalidSpectrumError,
    LinearizationError,
    NoSpectralGapError,
    ParameterRangeError,
    RankError,
    ShapeError,
    TikholearnError,
)
from .learn import (
    ParamResult,
    identity_closed_form,
    learn_parameter,
    linearized_parameter,
    regression_map,
)
from .model import ForwardModel, build_forward_model, pseudo_inverse_apply
from .sampling import Dataset, SamplingSpec, generate_dataset
from .subspace import (
    SubspaceEstimate,
    detect_rank_and_project,
    empirical_covariance,
    estimate_signal_and_noise,
    fit_subspace,
    projection_distance,
    theoretical_bound_B,
)
from .tikhonov import error_derivative, oracle_parameter, reconstruction_error, solve

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DecompositionError", "DegenerateOperatorError", "EmptyDataError",
    "InvalidSpectrumError", "LinearizationError", "NoSpectralGapError", "ParameterRangeError",
    "RankError", "ShapeError", "TikholearnError",
    "ParamResult", "identity_closed_form", "learn_parameter", "linearized_parameter",
    "regression_map",
    "ForwardModel", "build_forward_model", "pseudo_inverse_apply",
    "Dataset", "SamplingSpec", "generate_dataset",
    "SubspaceEstimate", "detect_rank_and_project", "empirical_covariance",
    "estimate_signal_and_noise", "fit_subspace", "projection_distance", "theoretical_bound_B",
    "error_derivative", "oracle_parameter", "reconstruction_error", "solve",
]
