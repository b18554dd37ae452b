"""Continuation-based eigenvalue tracking for linear delay models.

The package follows individual eigenpairs of the characteristic matrix
function P(s) = s E - A0 - sum_j A_j exp(-s tau_j) as a scalar parameter
sweeps: matrices may drift with the parameter, a delay magnitude may be
the parameter itself, and the delayed term may be shaped by stochastic
communication transfer functions (packet dropouts, Gamma noise).
"""

from .charfun import (
    WamsSpec,
    eval_dP_ds,
    eval_hp,
    eval_hs,
    eval_P,
    eval_ST,
    eval_STD,
)
from .errors import (
    ConfigurationError,
    DefectiveEigenvalueError,
    DelayTrackError,
    ManifestError,
    NonConvergenceError,
    RangeError,
    ReinitializationError,
    SingularityError,
    SingularSystemError,
)
from .model import (
    AffineFamily,
    DelayParameterFamily,
    DelayedLinearModel,
    ModelDerivatives,
    TabulatedFamily,
    derivative_family,
    evaluate_family,
    validate_model,
)
from .oracle import (
    ComparisonReport,
    compare_trajectory,
    hayes_roots,
    rand_ddae,
    spectrum_at,
)
from .spectral import (
    DiscretizedPencil,
    Eigenpair,
    discretize,
    lift_eigenvector,
    refine_newton,
    solve_discretized,
)
from .track import (
    ContinuationSystem,
    TrackEvent,
    TrackOptions,
    TrackState,
    Trajectory,
    assemble_delay_param,
    assemble_multi,
    assemble_single,
    assemble_wams,
    detect_fold,
    find_crossing,
    integrate_step,
    reinitialize_at,
    track_run,
)

__version__ = "0.1.0"

__all__ = [
    "AffineFamily",
    "ComparisonReport",
    "ConfigurationError",
    "ContinuationSystem",
    "DefectiveEigenvalueError",
    "DelayParameterFamily",
    "DelayTrackError",
    "DelayedLinearModel",
    "DiscretizedPencil",
    "Eigenpair",
    "ManifestError",
    "ModelDerivatives",
    "NonConvergenceError",
    "RangeError",
    "ReinitializationError",
    "SingularityError",
    "SingularSystemError",
    "TabulatedFamily",
    "TrackEvent",
    "TrackOptions",
    "TrackState",
    "Trajectory",
    "WamsSpec",
    "assemble_delay_param",
    "assemble_multi",
    "assemble_single",
    "assemble_wams",
    "compare_trajectory",
    "derivative_family",
    "detect_fold",
    "discretize",
    "eval_P",
    "eval_ST",
    "eval_STD",
    "eval_dP_ds",
    "eval_hp",
    "eval_hs",
    "evaluate_family",
    "find_crossing",
    "hayes_roots",
    "integrate_step",
    "lift_eigenvector",
    "rand_ddae",
    "refine_newton",
    "reinitialize_at",
    "solve_discretized",
    "spectrum_at",
    "track_run",
    "validate_model",
]
