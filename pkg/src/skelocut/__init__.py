"""Skeletal cut loci on convex polyhedra.

Build and validate convex polyhedra, compute shortest paths, cut loci and
source unfoldings, find source points whose cut locus lies in the
1-skeleton, and realize any combinatorial tree as such a cut locus.
"""

from .errors import (
    AmbiguousStarUnfolding,
    BadTopology,
    DegenerateInput,
    InputError,
    InterferenceViolation,
    NonConvex,
    NonConvexPolygon,
    NonPlanarFace,
    ParseError,
    RealizationFailure,
    RootNotBracketed,
    SearchBudgetExceeded,
    SelectionFailure,
    SkelocutError,
    TangentPlane,
    UnsupportedPattern,
    VerificationError,
    WitnessNotFound,
)
from .geodesic import (
    CutLocus,
    Net,
    VerificationReport,
    approx_distance_graph,
    cut_locus,
    geodesic_distance,
    shortest_geodesics,
    source_unfolding,
    verify_skeletal,
)
from .netio import SvgScene, export_obj, export_svg_net, import_obj, net_nonoverlap
from .poly import DEFAULT_TOL, Plane, Polyhedron, ToleranceConfig, build_polyhedron, convex_hull, truncate
from .realize import (
    ConstructionParams,
    Realization,
    RealizationTrace,
    base_solid,
    case_a,
    case_b,
    case_c,
    case_d,
    realize_tree,
    truncation_chain,
)
from .skeletal import (
    SkeletalReport,
    candidate_sources,
    every_vertex_report,
    has_hist,
    is_skeletal,
    one_edge_witness,
    scan_skeletal,
)
from .surface import SurfacePoint, edge_point, face_centroid, parse_source, vertex_point
from .treespec import (
    CombinatorialTree,
    canonical_form,
    choose_root,
    classify_deg2,
    crease_plan,
    level_decomposition,
    parse_tree,
    serialize_tree,
    tree_isomorphic,
)

__all__ = [name for name in dir() if not name.startswith("_")]
