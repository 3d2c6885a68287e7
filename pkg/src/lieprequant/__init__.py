"""Period groups, algebroid monodromy and path-space prequantization on small manifolds."""
from .algebroid import (
    Algebroid,
    Cochain,
    a_omega,
    canonical_transgression,
    central_extension,
    cochain_from_form,
    d_A,
    is_cocycle,
    lie_algebra,
    tangent,
)
from .apath import APath, APathFamily, concatenate, is_homotopy, solve_b, xi_flow
from .geometry import Atlas, BasePath, SphereGrid, TwoFormField, integrate_over_sphere, scaled_area_form
from .groupoid import DeskGroupoid, multiplicativity_residual, pair_groupoid_form, rho_star, theta_eval
from .monodromy import PeriodGroup, StructuralGroup, integrability_verdict, monodromy_r, reduce_period_group
from .prequant import PathBundle, build_path_bundle, prequantizable, quotient_to_circle

__version__ = "0.1.0"

__all__ = [
    "Algebroid",
    "Cochain",
    "a_omega",
    "canonical_transgression",
    "central_extension",
    "cochain_from_form",
    "d_A",
    "is_cocycle",
    "lie_algebra",
    "tangent",
    "APath",
    "APathFamily",
    "concatenate",
    "is_homotopy",
    "solve_b",
    "xi_flow",
    "Atlas",
    "BasePath",
    "SphereGrid",
    "TwoFormField",
    "integrate_over_sphere",
    "scaled_area_form",
    "DeskGroupoid",
    "multiplicativity_residual",
    "pair_groupoid_form",
    "rho_star",
    "theta_eval",
    "PeriodGroup",
    "StructuralGroup",
    "integrability_verdict",
    "monodromy_r",
    "reduce_period_group",
    "PathBundle",
    "build_path_bundle",
    "prequantizable",
    "quotient_to_circle",
]
