"""Anisotropic first-eigenvalue laboratory on convex planar domains."""

__version__ = "0.1.0"

from .errors import (
    AnisoeigError,
    ConfigurationError,
    DomainError,
    NumericalError,
    SingularityError,
)
from .norms import (
    NormSpec,
    NormTensors,
    euclidean,
    eval_norm,
    eval_tensors,
    is_strongly_convex,
    p_norm,
    quadratic,
    regularize,
)
from .dual_geometry import (
    DualEval,
    cauchy_schwarz_gap,
    dual_norm,
    dual_spec,
    f_distance,
    wulff_contains,
)

__all__ = [
    "AnisoeigError",
    "ConfigurationError",
    "DomainError",
    "NumericalError",
    "SingularityError",
    "NormSpec",
    "NormTensors",
    "euclidean",
    "p_norm",
    "quadratic",
    "regularize",
    "eval_norm",
    "eval_tensors",
    "is_strongly_convex",
    "DualEval",
    "dual_norm",
    "dual_spec",
    "f_distance",
    "wulff_contains",
    "cauchy_schwarz_gap",
]
