"""Complex-coefficient splitting integrators for semilinear parabolic PDEs
with Dirichlet boundary conditions, including the corrected third-order
scheme and its verification harness."""

from .correctors import CorrectorPair, build_corrector, solve_elliptic
from .expmv import AccuracyError, ExpmvConfig, expmv, expmv_affine
from .flows import (
    ComplexCoeffs,
    CustomExactSource,
    IndependentSource,
    LogisticSource,
    SourceTerm,
    corrector_flow,
    diffusion_flow,
    source_flow,
)
from .mesh import (
    BoundarySpec,
    DiffusionCoefficients,
    DiscreteOperator,
    Field,
    Mesh,
    assemble_operator,
    boundary_trace,
    l2_norm,
    sample,
)
from .schemes import Context, SchemeId, StepStats, integrate

__all__ = [
    "AccuracyError",
    "BoundarySpec",
    "ComplexCoeffs",
    "Context",
    "CorrectorPair",
    "CustomExactSource",
    "DiffusionCoefficients",
    "DiscreteOperator",
    "ExpmvConfig",
    "Field",
    "IndependentSource",
    "LogisticSource",
    "Mesh",
    "SchemeId",
    "SourceTerm",
    "StepStats",
    "assemble_operator",
    "boundary_trace",
    "build_corrector",
    "corrector_flow",
    "diffusion_flow",
    "expmv",
    "expmv_affine",
    "integrate",
    "l2_norm",
    "sample",
    "solve_elliptic",
    "source_flow",
]

__version__ = "0.1.0"
