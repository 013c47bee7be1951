"""Nonnegative matrix factorization of manifold-valued data.

Data on a Riemannian manifold are mapped to tangent coordinates at a base
point and factorized there, either plainly (T-NMDF) or with a curvature
corrected objective (CC-NMDF). Symmetric positive definite matrices, powers
of them and flat Euclidean space are supported.
"""

from .errors import (
    DegenerateFactor,
    InvalidInput,
    NMDFError,
    NotConverged,
    NotPositiveDefinite,
    NumericalError,
    ParseError,
    SolverFailure,
)
from .evaluation import cc_error, exact_error, rank_sweep, tangent_error, consistency_scan
from .manifolds import SPD, Euclidean, Power, barycenter
from .nmdf import Factorization, build_workspace, cc_nmdf, cc_objective, t_nmdf, verify_basepoint

__version__ = "0.1.0"

__all__ = [
    "SPD", "Euclidean", "Power", "barycenter",
    "Factorization", "build_workspace", "cc_nmdf", "cc_objective", "t_nmdf",
    "verify_basepoint", "cc_error", "exact_error", "tangent_error", "rank_sweep",
    "consistency_scan", "NMDFError", "NumericalError", "InvalidInput", "NotPositiveDefinite",
    "ParseError", "SolverFailure", "NotConverged", "DegenerateFactor",
]
