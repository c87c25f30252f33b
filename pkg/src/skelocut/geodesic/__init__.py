from .engine import GeodesicField, UnfoldedGeodesic, geodesic_distance, shortest_geodesics
from .cutlocus import CutArc, CutLocus, CutNode, cut_locus
from .unfold import Net, PlacedPolygon, source_unfolding
from .graph import GraphDistances, approx_distance_graph
from .verify import VerificationReport, verify_skeletal
