"""Quadratic transmission pencils: assembly, spectra, chains, resolvent diagnostics."""

__version__ = "0.1.0"

from .symbols import (
    BoundaryPair,
    CharacteristicRoots,
    Cone,
    PencilKind,
    SymbolPoint,
    characteristic_roots,
    check_condition1,
    check_condition2,
    condition1_roots,
    lopatinsky_determinant,
    principal_symbol,
)
from .discretize import (
    DiscretePencil,
    Grid1D,
    MediumProfile,
    apply_pencil,
    assemble_pencil,
    assemble_pencil_2d,
    export_pencil,
    make_grid,
)
from .oracle import CharacteristicFunction, char_det, find_roots, winding_number
from .spectra import (
    CompanionOperator,
    CountingReport,
    EigenSolution,
    KeldyshChain,
    chain_matrix,
    completeness_residual,
    counting,
    eigen,
    find_reference_point,
    jordan_from_keldysh,
    keldysh_from_jordan,
    linearize,
    schatten_norm,
    solve_spectrum,
    solve_spectrum_2d,
    torus_embedding_sum,
    verify_chain,
)
from .resolvent import (
    CircleGrowthReport,
    LaurentData,
    RayScan,
    WeierstrassProduct,
    carleman_check,
    circle_growth_scan,
    companion_block_inverse_check,
    laurent_coefficients,
    phi_eval,
    pole_avoiding_radii,
    ray_scan,
    resolvent_identity_check,
    resolvent_norm,
    t_infinity_estimate,
)

__all__ = [
    "BoundaryPair",
    "CharacteristicRoots",
    "CharacteristicFunction",
    "CircleGrowthReport",
    "CompanionOperator",
    "Cone",
    "CountingReport",
    "DiscretePencil",
    "EigenSolution",
    "Grid1D",
    "KeldyshChain",
    "LaurentData",
    "MediumProfile",
    "PencilKind",
    "RayScan",
    "SymbolPoint",
    "WeierstrassProduct",
    "apply_pencil",
    "assemble_pencil",
    "assemble_pencil_2d",
    "carleman_check",
    "chain_matrix",
    "char_det",
    "characteristic_roots",
    "check_condition1",
    "check_condition2",
    "circle_growth_scan",
    "companion_block_inverse_check",
    "completeness_residual",
    "condition1_roots",
    "counting",
    "eigen",
    "export_pencil",
    "find_reference_point",
    "find_roots",
    "jordan_from_keldysh",
    "keldysh_from_jordan",
    "laurent_coefficients",
    "linearize",
    "lopatinsky_determinant",
    "make_grid",
    "phi_eval",
    "pole_avoiding_radii",
    "principal_symbol",
    "ray_scan",
    "resolvent_identity_check",
    "resolvent_norm",
    "schatten_norm",
    "solve_spectrum",
    "solve_spectrum_2d",
    "t_infinity_estimate",
    "torus_embedding_sum",
    "verify_chain",
    "winding_number",
]
