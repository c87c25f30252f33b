import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelocut import (
    approx_distance_graph,
    cut_locus,
    edge_point,
    face_centroid,
    geodesic_distance,
    shortest_geodesics,
    source_unfolding,
    verify_skeletal,
    vertex_point,
)
from skelocut import solids
from skelocut.netio import net_area_matches, net_nonoverlap
from skelocut.surface import face_point, position

TETRA = solids.tetrahedron()
CUBE = solids.cube()
OCTA = solids.octahedron()


def _vertex_at(P, p):
    return P.find_vertex(p)


# -- distances against closed forms -------------------------------------------


def test_tetra_adjacent_centroids():
    # two equilateral triangles unfolded: twice the inradius of a unit triangle
    d = geodesic_distance(TETRA, face_centroid(TETRA, 0), face_centroid(TETRA, 1))
    assert d == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_cube_opposite_corners():
    a, b = _vertex_at(CUBE, (0, 0, 0)), _vertex_at(CUBE, (1, 1, 1))
    paths = shortest_geodesics(CUBE, vertex_point(a), vertex_point(b))
    assert len(paths) == 6
    assert all(g.length == pytest.approx(math.sqrt(5), abs=1e-12) for g in paths)


def test_octahedron_antipodal_vertices():
    a, b = _vertex_at(OCTA, (0, 0, 1)), _vertex_at(OCTA, (0, 0, -1))
    paths = shortest_geodesics(OCTA, vertex_point(a), vertex_point(b))
    # one path across the midpoint of each equatorial edge, length twice a face height
    assert len(paths) == 4
    assert paths[0].length == pytest.approx(math.sqrt(6), abs=1e-12)


def test_cube_face_centers_across_an_edge():
    bottom = next(f for f in range(CUBE.n_faces) if CUBE.face_normals[f][2] < -0.5)
    side = next(f for f in range(CUBE.n_faces) if CUBE.face_normals[f][0] > 0.5)
    assert geodesic_distance(CUBE, face_centroid(CUBE, bottom), face_centroid(CUBE, side)) == pytest.approx(1.0)


def test_distance_to_self_is_zero():
    x = face_centroid(CUBE, 2)
    assert geodesic_distance(CUBE, x, x) == pytest.approx(0.0, abs=1e-12)


# -- random pairs: metric properties and the graph oracle ---------------------


@st.composite
def surface_points(draw, P):
    f = draw(st.integers(0, P.n_faces - 1))
    face = P.faces[f]
    k = draw(st.integers(1, len(face) - 2))
    w = np.array([draw(st.floats(0.01, 1.0)) for _ in range(3)])
    w /= w.sum()
    weights = [0.0] * len(face)
    weights[0], weights[k], weights[k + 1] = w
    return face_point(P, f, weights)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_symmetry_and_chord_bound(data):
    P = data.draw(st.sampled_from([TETRA, CUBE, OCTA]))
    x, y = data.draw(surface_points(P)), data.draw(surface_points(P))
    d = geodesic_distance(P, x, y)
    assert d == pytest.approx(geodesic_distance(P, y, x), abs=1e-9)
    assert d >= np.linalg.norm(position(P, x) - position(P, y)) - 1e-12


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_triangle_inequality(data):
    P = CUBE
    x, y, z = (data.draw(surface_points(P)) for _ in range(3))
    assert geodesic_distance(P, x, z) <= geodesic_distance(P, x, y) + geodesic_distance(P, y, z) + 1e-9


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_graph_distance_is_an_upper_bound(data):
    P = data.draw(st.sampled_from([TETRA, CUBE]))
    x, y = data.draw(surface_points(P)), data.draw(surface_points(P))
    exact = geodesic_distance(P, x, y)
    approx = approx_distance_graph(P, x, 16).distance_to(y)
    assert approx >= exact - P.eps_len
    assert approx <= exact * 1.05 + 1e-12


def test_geodesic_paths_have_their_length():
    x, y = face_centroid(CUBE, 0), face_centroid(CUBE, 3)
    for g in shortest_geodesics(CUBE, x, y):
        pts = np.asarray(g.points)
        assert np.linalg.norm(np.diff(pts, axis=0), axis=1).sum() == pytest.approx(g.length, abs=1e-9)


# -- cut loci -----------------------------------------------------------------


def test_tetra_face_center_cut_locus():
    C = cut_locus(TETRA, face_centroid(TETRA, 0))
    apex = (set(range(4)) - set(TETRA.faces[0])).pop()
    assert C.is_skeletal
    assert sorted(TETRA.edges[e] for e in C.covered_edges()) == sorted(
        tuple(sorted((v, apex))) for v in TETRA.faces[0])


def test_cube_face_center_cut_locus():
    bottom = next(f for f in range(CUBE.n_faces) if CUBE.face_normals[f][2] < -0.5)
    C = cut_locus(CUBE, face_centroid(CUBE, bottom))
    covered = [CUBE.edges[e] for e in C.covered_edges()]
    # the four vertical edges, joined by arcs across the top face
    assert len(covered) == 4
    assert all(abs(CUBE.vertices[i][2] - CUBE.vertices[j][2]) == 1 for i, j in covered)
    assert not C.is_skeletal


def test_cube_corner_cut_locus():
    a, b = _vertex_at(CUBE, (0, 0, 0)), _vertex_at(CUBE, (1, 1, 1))
    C = cut_locus(CUBE, vertex_point(a))
    assert {v for e in C.covered_edges() for v in CUBE.edges[e]} == {b} | set(CUBE.skeleton[b])


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_cut_locus_is_a_tree_with_vertex_leaves(data):
    P = data.draw(st.sampled_from([TETRA, CUBE, OCTA, solids.dipyramid(5)]))
    x = data.draw(surface_points(P))
    C = cut_locus(P, x)
    G = C.graph()
    assert nx.is_tree(G)
    leaves = [n for n in G if G.degree(n) == 1]
    assert all(C.nodes[n].is_vertex for n in leaves)
    # every vertex is in the cut locus of a flat source
    assert {C.nodes[n].point.index for n in G if C.nodes[n].is_vertex} == set(range(P.n_vertices))


@settings(max_examples=10, deadline=None)
@given(st.data())
def test_source_unfolding_is_a_net(data):
    P = data.draw(st.sampled_from([TETRA, CUBE, OCTA]))
    x = data.draw(surface_points(P))
    net = source_unfolding(P, x)
    assert net_area_matches(net, P, rel=1e-6)
    assert net_nonoverlap(net)


def test_source_unfolding_glue_count():
    # every cut fragment is glued to exactly one partner
    net = source_unfolding(CUBE, face_centroid(CUBE, 0))
    assert 2 * len(net.glue) == len(net.boundary)


# -- skeletal verification ----------------------------------------------------


def test_verify_accepts_true_cut_locus():
    x = face_centroid(TETRA, 0)
    rep = verify_skeletal(TETRA, x, cut_locus(TETRA, x).covered_edges())
    assert rep.passed, rep.failures()


def test_verify_rejects_wrong_claim():
    x = face_centroid(TETRA, 0)
    wrong = {TETRA.edge_id(*TETRA.faces[0][:2]), TETRA.edge_id(*TETRA.faces[0][1:3]),
             TETRA.edge_id(TETRA.faces[0][0], 3 if 3 not in TETRA.faces[0] else 0)}
    assert not verify_skeletal(TETRA, x, wrong).passed


def test_verify_rejects_non_spanning_claim():
    x = face_centroid(TETRA, 0)
    covered = sorted(cut_locus(TETRA, x).covered_edges())
    assert not verify_skeletal(TETRA, x, covered[:2]).passed


def test_rim_point_of_degenerate_square():
    D = solids.doubly_covered_square()
    C = cut_locus(D, edge_point(D, 0, 0.5))
    assert C.is_skeletal
    assert len(C.covered_edges()) == 3


# -- spec examples and structural properties ----------------------------------


def test_adjacent_vertices_along_an_edge():
    for P in (TETRA, CUBE, OCTA):
        i, j = P.edges[0]
        assert geodesic_distance(P, vertex_point(i), vertex_point(j)) == pytest.approx(P.edge_length(0), abs=1e-12)


def test_graph_oracle_centroid_to_apex():
    x = face_centroid(TETRA, 0)
    apex = (set(range(4)) - set(TETRA.faces[0])).pop()
    exact = geodesic_distance(TETRA, x, vertex_point(apex))
    assert approx_distance_graph(TETRA, x, 64).distance_to(vertex_point(apex)) == pytest.approx(exact, rel=0.01)


@settings(max_examples=8, deadline=None)
@given(st.data())
def test_graph_refinement_is_monotone(data):
    P = CUBE
    x, y = data.draw(surface_points(P)), data.draw(surface_points(P))
    coarse = approx_distance_graph(P, x, 64).distance_to(y)
    fine = approx_distance_graph(P, x, 128).distance_to(y)
    assert fine <= coarse + P.eps_len


def _shared_edge(a, b, tol=1e-9):
    common = [p for p in a if any(math.dist(p, q) <= tol for q in b)]
    return common[:2]


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_strip_containment(data):
    P = data.draw(st.sampled_from([TETRA, CUBE, OCTA]))
    x, y = data.draw(surface_points(P)), data.draw(surface_points(P))
    for g in shortest_geodesics(P, x, y):
        (sx, sy), (tx, ty) = g.planar
        assert math.hypot(tx - sx, ty - sy) == pytest.approx(g.length, abs=1e-9)
        for (_, pa), (_, pb) in zip(g.strip, g.strip[1:]):
            e = _shared_edge(pa, pb)
            assert len(e) == 2
            (ax, ay), (bx, by) = e
            # the planar segment crosses the shared edge inside the edge
            den = (tx - sx) * (by - ay) - (ty - sy) * (bx - ax)
            assert abs(den) > 0
            u = ((ax - sx) * (ty - sy) - (ay - sy) * (tx - sx)) / den
            assert -1e-9 <= u <= 1 + 1e-9


@pytest.mark.parametrize("P, x", [(CUBE, face_centroid(CUBE, 0)), (OCTA, face_centroid(OCTA, 1)),
                                  (solids.dipyramid(5), face_centroid(solids.dipyramid(5), 2))])
def test_node_degree_equals_multiplicity(P, x):
    C = cut_locus(P, x)
    for node in C.nodes:
        if not node.is_vertex:
            assert node.degree == node.multiplicity
