"""Exact Čech homology of line-bundle twists on lattice polytopes."""

from .exact_linalg import (
    GF,
    QQ,
    ZZ,
    CoefficientRing,
    Contraction,
    FreeChainComplex,
    HomologyResult,
    InvalidComplex,
    Matrix,
    NonNilpotent,
    TorsionObstruction,
    complex_homology,
    contraction,
    invariant_factors,
    perturb_transfer,
    smith_normal_form,
)
from .polytope import (
    DuplicateVertex,
    EhrhartPolynomial,
    Face,
    FaceLattice,
    LatticePolytope,
    NotFullDimensional,
    cone_membership,
    ehrhart_polynomial,
    face_lattice,
    facets_from_vertices,
    join,
    lattice_points,
    np_index,
    standard_simplex,
)
from .orientation import DegenerateBasis, IncidenceSystem, incidence_numbers
from .sheaf_complexes import (
    InvalidMonomial,
    NonSquareZero,
    NotChainMap,
    TwistComplex,
    bundle_tensor,
    cone,
    direct_sum,
    line_bundle,
    make_twist_complex,
    suspend,
    twist,
    validate,
)
from .cech import (
    CechResult,
    ColumnComplex,
    NotUnimodular,
    SupportEscapesBox,
    SupportTable,
    WindowMismatch,
    acyclicity_window,
    cech_homology,
    column_complex,
    con_vs_bundle_check,
    constant_diagram_cech,
    euler_characteristic,
    hk_acyclic,
    line_bundle_cohomology,
    simplex_cone_check,
    splitting_matrix,
    support_table,
)

__version__ = "0.1.0"
