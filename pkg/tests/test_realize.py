import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelocut import (
    CombinatorialTree,
    ConstructionParams,
    InputError,
    InterferenceViolation,
    RealizationFailure,
    base_solid,
    case_a,
    case_b,
    case_c,
    case_d,
    cut_locus,
    geodesic_distance,
    parse_tree,
    realize_tree,
    shortest_geodesics,
    tree_isomorphic,
    truncation_chain,
)
from skelocut.netio import dumps_json
from skelocut.surface import SurfacePoint, locate


def base_face(P):
    return next(f for f in range(P.n_faces) if P.face_normals[f][2] < -0.999)


def chain_on_pyramid(d, k, z_fraction, lateral=0):
    P = base_solid(d)
    apex = int(np.argmax(P.vertices[:, 2]))
    v = sorted(P.skeleton[apex])[lateral]
    Q, z, ts, entry = truncation_chain(P, (apex, v), z_fraction, k)
    return P, Q, z, ts, entry


def reflection(deg):
    n = np.array([-math.sin(math.radians(deg)), math.cos(math.radians(deg)), 0.0])
    return np.eye(3) - 2 * np.outer(n, n)


def rotation(deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def invariant(P, M, tol=1e-9):
    W = P.vertices @ M.T
    return max(np.min(np.linalg.norm(P.vertices - w, axis=1)) for w in W) <= tol


# -- parameters ---------------------------------------------------------------


@pytest.mark.parametrize("field, value", [("z_fraction", 0.0), ("z_fraction", 1.0), ("margin_eps", 1.0),
                                          ("v3prime_fraction", 1.2), ("v1prime_overshoot", 1.0),
                                          ("bend", 0.6), ("max_iter", 0)])
def test_params_validation(field, value):
    with pytest.raises(InputError):
        ConstructionParams().replace(**{field: value})


# -- base solids --------------------------------------------------------------


def test_base_solid_three_is_regular_tetrahedron():
    P = base_solid(3)
    lengths = [P.edge_length(e) for e in range(P.n_edges)]
    assert lengths == pytest.approx([math.sqrt(3)] * 6, abs=1e-12)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_base_solid_pyramid(d):
    P = base_solid(d)
    assert (P.n_vertices, P.n_faces) == (d + 1, d + 1)
    assert P.vertices[:, 2].max() == pytest.approx(1.0)


# -- truncation chains ---------------------------------------------------------


@pytest.mark.parametrize("d, k", [(3, 1), (4, 1), (4, 2), (5, 3)])
def test_truncation_chain_geometry(d, k):
    P, Q, z, ts, entry = chain_on_pyramid(d, k, 0.5)
    assert len(ts) == k + 1
    x = entry["x"]
    # all images of z sit on one circle about x
    assert [np.linalg.norm(np.asarray(q) - x) for q in entry["z_images"]] == pytest.approx(
        [entry["r_z"]] * (k + 2), abs=1e-12)
    # the surface distance to z, from the exact geodesic engine, is that radius
    xs = locate(P, x, base_face(P))
    zs = locate(P, entry["z"], P.halfedges[(int(np.argmax(P.vertices[:, 2])), entry["parent"][1])])
    assert geodesic_distance(P, xs, zs) == pytest.approx(entry["r_z"], abs=1e-9)
    # mediator property of the inner chain points
    for j in range(2, k + 1):
        t = np.asarray(entry["chain"][j - 1])
        assert np.linalg.norm(t - entry["z"]) == pytest.approx(np.linalg.norm(t - entry["z_images"][j]), abs=1e-9)
    # the truncation edges z t_i lie in the cut locus of the base center
    xq = locate(Q, x, base_face(Q))
    covered = cut_locus(Q, xq).covered_edges()
    assert all(Q.edge_id(z, t) in covered for t in ts)


def test_truncation_chain_rejects_bad_input():
    P = base_solid(4)
    apex = int(np.argmax(P.vertices[:, 2]))
    v = sorted(P.skeleton[apex])[0]
    with pytest.raises(InputError):
        truncation_chain(P, (apex, v), 0.5, 0)
    with pytest.raises(InputError):
        truncation_chain(P, (apex, v), 1.5, 1)


def test_truncation_chain_margin_violation():
    P = base_solid(4)
    apex = int(np.argmax(P.vertices[:, 2]))
    v = sorted(P.skeleton[apex])[0]
    with pytest.raises(InterferenceViolation):
        truncation_chain(P, (apex, v), 0.5, 1, ConstructionParams(margin_eps=0.99))


def test_truncation_chain_k1_on_tetrahedron():
    P, Q, z, ts, entry = chain_on_pyramid(3, 1, 0.5)
    assert Q.skeleton.degree(z) == 3
    assert Q.n_faces == 5


def _angle_at(x, p, q):
    u, w = np.asarray(p) - x, np.asarray(q) - x
    return math.acos(np.clip(u @ w / np.linalg.norm(u) / np.linalg.norm(w), -1, 1))


def test_first_chain_point_approaches_first_image():
    angles = []
    for k in range(1, 9):
        P, Q, z, ts, entry = chain_on_pyramid(3, k, 0.5)
        angles.append(_angle_at(entry["x"], entry["chain"][0], entry["z_images"][0]))
        assert Q.skeleton.degree(z) == k + 2
    assert all(b < a for a, b in zip(angles, angles[1:]))


@settings(max_examples=12, deadline=None)
@given(st.integers(3, 6), st.integers(1, 4), st.floats(0.2, 0.8))
def test_truncation_chain_property(d, k, f):
    try:
        P, Q, z, ts, entry = chain_on_pyramid(d, k, f)
    except InterferenceViolation:
        return
    assert Q.n_vertices == P.n_vertices + k + 1
    assert Q.n_faces == P.n_faces + k
    alpha = entry["alpha"]
    assert alpha * (k + 1) == pytest.approx(entry["A"])
    assert 0 < alpha < math.pi


# -- the four degree-2 base configurations ------------------------------------


def test_case_a_solution():
    R = case_a()
    step = R.trace.of_kind("case_a")[0]
    # regression value of the bisection root; correctness is checked by verify()
    assert step["s"] == pytest.approx(0.19700992016311314, abs=1e-9)
    assert R.verify().passed
    assert tree_isomorphic(R.extracted_tree(), parse_tree("(((()()))()())"))


@pytest.mark.parametrize("k", [2, 3])
def test_case_a_longer_chains(k):
    R = case_a(k=k)
    assert R.verify().passed


def test_case_b_angle_condition():
    R = case_b()
    step = R.trace.of_kind("case_b")[0]
    assert step["beta_final"] == pytest.approx(step["alpha"], abs=1e-9)
    assert step["delta"][0] < step["alpha"] < step["delta"][2]
    assert R.verify().passed
    assert tree_isomorphic(R.extracted_tree(), parse_tree("((())()())"))


@pytest.mark.parametrize("u_fraction", [0.3, 0.6])
def test_case_c(u_fraction):
    R = case_c(u_fraction=u_fraction)
    step = R.trace.of_kind("case_c")[0]
    assert step["alpha"] == pytest.approx(step["beta"], abs=1e-9)
    assert len(step["solutions"]) == 4
    assert R.verify().passed
    assert tree_isomorphic(R.extracted_tree(), parse_tree("((())(())())"))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_case_d(n):
    R = case_d(n=n)
    step = R.trace.of_kind("case_d")[0]
    assert step["delta_z"] == pytest.approx([step["delta"]] * n, abs=1e-9)
    assert R.verify().passed
    ring = CombinatorialTree.from_edges(2 * n + 1, [(0, 1 + 2 * i) for i in range(n)]
                                        + [(1 + 2 * i, 2 + 2 * i) for i in range(n)])
    assert tree_isomorphic(R.extracted_tree(), ring)


def test_case_symmetries():
    # cases a and b are symmetric about the plane through the apex and v1,
    # case c about the plane through the apex and v3, case d under rotation
    assert invariant(case_a().polyhedron, reflection(30))
    assert invariant(case_b().polyhedron, reflection(30))
    assert invariant(case_c().polyhedron, reflection(90))
    for n in (3, 4, 5):
        assert invariant(case_d(n=n).polyhedron, rotation(360 / n))


def test_case_a_side_edge_excluded():
    R = case_a()
    P = R.polyhedron
    pts = R.trace.of_kind("case_a")[0]["points"]
    u, t1 = P.find_vertex(pts["u"]), P.find_vertex(pts["t1"])
    e = P.edge_id(u, t1)
    assert e not in R.claimed
    f = P.edge_faces[e][0]
    mid = locate(P, (P.vertices[u] + P.vertices[t1]) / 2, f)
    assert len(shortest_geodesics(P, R.source, mid)) == 1
    assert e not in cut_locus(P, R.source).covered_edges()


def test_case_b_balance_from_final_solid():
    # surface angle at v3 on both sides of the path x v3 a, from the final face lattice
    R = case_b()
    P = R.polyhedron
    pts = R.trace.of_kind("case_b")[0]["points"]
    a, v2, v3 = (P.find_vertex(pts[k]) for k in ("a", "v2", "v3"))
    x = np.zeros(3)
    right = _angle_at(P.vertices[v3], x, P.vertices[v2]) + _angle_at(P.vertices[v3], P.vertices[v2], P.vertices[a])
    left = P.total_angles[v3] - right
    assert left == pytest.approx(right, abs=1e-8)


def test_case_c_congruences():
    st_ = case_c().trace.of_kind("case_c")[0]
    g = {k: np.asarray(v) for k, v in st_.items() if k in
         ("u1", "u2", "u12", "u21", "y1", "y2", "a13", "u13", "a12", "a0", "a_prime", "v3prime")}
    d = lambda p, q: float(np.linalg.norm(g[p] - g[q]))  # noqa: E731
    assert d("u1", "u2") == pytest.approx(d("u12", "u21"), abs=1e-9)
    # isosceles trapezoids u1 u2 y2 y1 and u12 u21 y2 y1 share y1 y2 and have equal sides and diagonals
    assert [d("u1", "y1"), d("u2", "y2"), d("u1", "y2")] == pytest.approx(
        [d("u12", "y1"), d("u21", "y2"), d("u12", "y2")], abs=1e-9)
    assert _angle_at(g["u13"], g["y1"], g["a13"]) == pytest.approx(_angle_at(g["u12"], g["y1"], g["a12"]), abs=1e-9)
    # a13 lies strictly between a0 and a' on the circle O
    c = g["v3prime"]
    ang = lambda p: math.atan2(p[1] - c[1], p[0] - c[0])  # noqa: E731
    lo, hi, mid = ang(g["a0"]), ang(g["a_prime"]), ang(g["a13"])
    span = (hi - lo) % (2 * math.pi)
    if span > math.pi:
        lo, span = hi, 2 * math.pi - span
    assert 0 < (mid - lo) % (2 * math.pi) < span


@pytest.mark.parametrize("n", [3, 4])
def test_case_d_ring(n):
    R = case_d(n=n)
    P = R.polyhedron
    step = R.trace.of_kind("case_d")[0]
    pts = step["points"]
    base = base_solid(n)
    # common similarity ratio of the base chain
    bv = [p for p in base.vertices if abs(p[2]) < 1e-12]
    ratios = [np.linalg.norm(pts[f"y{i + 1}"]) / np.linalg.norm(bv[0]) for i in range(n)]
    assert ratios == pytest.approx([ratios[0]] * n, abs=1e-9)
    # every geodesic from the source to the apex has the untruncated length
    a = P.find_vertex(pts["a"])
    paths = shortest_geodesics(P, R.source, SurfacePoint("vertex", a))
    assert all(g.length == pytest.approx(step["delta"], abs=1e-8) for g in paths)
    covered = cut_locus(P, R.source).covered_edges()
    for i in range(n):
        u = P.find_vertex(pts[f"u{i + 1}"])
        assert P.skeleton.degree(u) == 4
        assert sum(u in P.edges[e] for e in covered) == 2


# -- driver -------------------------------------------------------------------


@pytest.mark.parametrize("text", ["(()()())", "(()()()()()())", "((())()())", "(((()()))()())",
                                  "((())(())(()))", "(((()))(())()())", "(((()())())(()())(()()))"])
def test_realize_tree(text):
    T = parse_tree(text)
    R = realize_tree(T)
    assert R.verify().passed
    assert tree_isomorphic(R.extracted_tree(), T)
    assert sorted(R.node_map) == list(range(T.n))
    assert len(set(R.node_map.values())) == T.n
    # every tree edge is a claimed polyhedron edge
    claimed = set(R.claimed_pairs)
    assert all(tuple(sorted((R.node_map[i], R.node_map[j]))) in claimed for i, j in T.edges)


def test_realize_path_on_degenerate_triangle():
    R = realize_tree(parse_tree("((()))"))
    assert R.polyhedron.degenerate
    assert R.verify().passed


@pytest.mark.parametrize("text", ["()", "(())"])
def test_tiny_paths_fail(text):
    with pytest.raises(RealizationFailure):
        realize_tree(parse_tree(text))


def test_realization_json_is_deterministic():
    R = realize_tree(parse_tree("((())()())"))
    assert dumps_json(R.to_dict()) == dumps_json(realize_tree(parse_tree("((())()())")).to_dict())


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_trees_realize(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 10))
    edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    T = CombinatorialTree.from_edges(n, edges)
    if max(T.degrees) < 3 or max(T.degrees) > 6:
        return
    R = realize_tree(T)
    assert R.verify().passed
    assert tree_isomorphic(R.extracted_tree(), T)
