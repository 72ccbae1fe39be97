"""Degree of compact perturbations of the identity on l2, computed by Galerkin
approximation, together with executable checks of its basic properties."""

from .brouwer import DEFAULT_ENGINE, DegreeCertificate, EngineConfig, FiniteMap, brouwer_degree
from .catalog import (
    annulus_example,
    build,
    finite_rank_test,
    list_catalog,
    potential_map,
    random_tail_map,
    standard_gradient_map,
)
from .errors import CertificationFailure
from .expr import PotentialExpr
from .hilbert import BlockRotation, HilbertVector
from .maps import (
    CompactMapSpec,
    GradientLocalMap,
    GradientOtopy,
    LocalMap,
    Otopy,
    galerkin,
    gradient_audit,
    rotate,
    straight_line_homotopy,
    suspend,
)
from .neighborhoods import components, safe_neighborhood
from .otopy import approximate_by_suspension, audit_otopy, certify_otopy, suspend_finite_otopy
from .pipeline import (
    DegreeReport,
    GapCertificate,
    check_basis_independence,
    check_region_independence,
    compute_Deg,
    estimate_gap,
    select_N,
)
from .regions import Annulus, Ball, Box, Region

__version__ = "0.1.0"
