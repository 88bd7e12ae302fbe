"""Numeric tensor calculus for 4-dimensional spaces with non-symmetric metrics.

Models are immutable after loading and every per-point computation is a pure
function, so distinct points may be evaluated concurrently without locking.
"""

from .connection import (ConnectionAtPoint, ExpressionField, covariant_derivative,
                         generalized_christoffel, torsion_at)
from .curvature import (CurvatureAtPoint, FamilyCurvatureAtPoint,
                        curvature_family_at, riemann_at)
from .errors import (ConsistencyError, EvaluationDomainError,
                     ExpressionSyntaxError, MathError, ModelError, NsmetricError,
                     NonTimelikeFrameError, RadicandSignError, SingularMetricError,
                     TensorOpError, UnknownIdentifierError)
from .example import example_model
from .exprjet import (Jet2, evaluate_jet2, evaluate_value, parse_expression,
                      to_source)
from .izspace import (IzConnectionAtPoint, IzCurvatureAtPoint, iz_connection_at,
                      iz_curvature_at, iz_emt_at)
from .matter import (FrameAtPoint, MatterFieldTerm, MatterReport,
                     combine_matter_fields, comoving_frame, eisenhart_matter_lagrangian,
                     emt_family, eom_residual, frame_from_scalar, madsen_emt,
                     pressure_density_omega, solve_antisym_profile, table1_quantities)
from .model import (CoeffSet, MetricAtPoint, SpacetimeModel, load_model,
                    load_model_file, metric_at, model_from_components)
from .tensors import SymMetricAtPoint, Tensor, contract, invert_sym4, raise_lower

__version__ = "0.1.0"

__all__ = [
    "CoeffSet", "ConnectionAtPoint", "ConsistencyError", "CurvatureAtPoint",
    "EvaluationDomainError", "ExpressionField", "ExpressionSyntaxError",
    "FamilyCurvatureAtPoint", "FrameAtPoint", "IzConnectionAtPoint",
    "IzCurvatureAtPoint", "Jet2", "MathError", "MatterFieldTerm", "MatterReport",
    "MetricAtPoint", "ModelError", "NonTimelikeFrameError", "NsmetricError",
    "RadicandSignError", "SingularMetricError", "SpacetimeModel",
    "SymMetricAtPoint", "Tensor", "TensorOpError", "UnknownIdentifierError",
    "combine_matter_fields", "comoving_frame", "contract", "covariant_derivative",
    "curvature_family_at", "eisenhart_matter_lagrangian", "emt_family",
    "eom_residual", "evaluate_jet2", "evaluate_value", "example_model",
    "frame_from_scalar", "generalized_christoffel", "invert_sym4",
    "iz_connection_at", "iz_curvature_at", "iz_emt_at", "load_model",
    "load_model_file", "madsen_emt", "metric_at", "model_from_components",
    "parse_expression", "pressure_density_omega", "raise_lower", "riemann_at",
    "solve_antisym_profile", "table1_quantities", "to_source", "torsion_at",
]
