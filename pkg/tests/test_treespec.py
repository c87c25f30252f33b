import json

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelocut import (
    CombinatorialTree,
    ParseError,
    canonical_form,
    choose_root,
    classify_deg2,
    crease_plan,
    level_decomposition,
    parse_tree,
    serialize_tree,
    tree_isomorphic,
)
from skelocut.treespec import PATH_CASE, TreeError, load_tree, tree_centers, tree_from_json, tree_to_json

SEVEN_LEAF = "(((()())())(()())(()()))"


@st.composite
def trees(draw, min_n=2, max_n=14, max_degree=6):
    n = draw(st.integers(min_n, max_n))
    edges = []
    deg = [0] * n
    for v in range(1, n):
        u = draw(st.sampled_from([u for u in range(v) if deg[u] < max_degree]))
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    return CombinatorialTree.from_edges(n, edges)


def relabel(T, perm):
    return CombinatorialTree.from_edges(T.n, [(perm[i], perm[j]) for i, j in T.edges])


# -- parsing ------------------------------------------------------------------


def test_parse_seven_leaf():
    T = parse_tree(SEVEN_LEAF)
    assert T.n == 12
    assert len(T.leaves) == 7
    assert T.degrees[0] == 3
    assert T.root == 0


def test_parse_single_node():
    T = parse_tree("()")
    assert T.n == 1 and T.edges == []


@pytest.mark.parametrize("text, offset", [("(()", 3), ("())", 2), ("(x)", 1), ("()()", 2), ("", 0)])
def test_parse_errors_carry_offset(text, offset):
    with pytest.raises(ParseError) as info:
        parse_tree(text)
    assert info.value.offset == offset


@pytest.mark.parametrize("n, edges", [(3, [(0, 1)]), (3, [(0, 1), (1, 0)]), (2, [(0, 0)]),
                                      (4, [(0, 1), (2, 3), (0, 1)]), (2, [(0, 2)])])
def test_invalid_edge_lists(n, edges):
    with pytest.raises(TreeError):
        CombinatorialTree.from_edges(n, edges)


def test_degree_limit():
    with pytest.raises(TreeError):
        CombinatorialTree.from_edges(66, [(0, k) for k in range(1, 66)])


def test_json_round_trip():
    T = parse_tree(SEVEN_LEAF)
    U = tree_from_json(tree_to_json(T))
    assert U.edges == T.edges and U.root == T.root
    assert load_tree(json.dumps({"edges": [[0, 1], [1, 2]]})).n == 3


def test_bad_json():
    with pytest.raises(ParseError):
        tree_from_json("{not json")
    with pytest.raises(ParseError):
        tree_from_json({"nodes": []})


# -- canonical forms ----------------------------------------------------------


def test_serialize_is_sorted_ahu():
    # children are sorted as strings and "(" < ")"
    assert serialize_tree(parse_tree("(()(()))")) == "((())())"


@given(trees(), st.randoms())
def test_relabelling_preserves_canonical_form(T, rnd):
    perm = list(range(T.n))
    rnd.shuffle(perm)
    U = relabel(T, perm)
    assert canonical_form(U) == canonical_form(T)
    assert tree_isomorphic(T, U)


@given(trees(max_n=10), trees(max_n=10))
def test_isomorphism_matches_networkx(T, U):
    assert tree_isomorphic(T, U) == nx.is_isomorphic(T.to_networkx(), U.to_networkx())


@given(trees())
def test_parenthesis_round_trip(T):
    U = parse_tree(serialize_tree(T))
    assert tree_isomorphic(T, U)
    assert serialize_tree(U, 0) == serialize_tree(T)


@given(trees())
def test_centers_match_networkx(T):
    assert tree_centers(T) == sorted(nx.center(T.to_networkx()))


# -- roots, levels and cases --------------------------------------------------


def test_path_has_no_root():
    assert choose_root(parse_tree("((()))")) == PATH_CASE


def test_root_is_first_max_degree_node():
    T = CombinatorialTree.from_edges(6, [(0, 1), (1, 2), (1, 3), (1, 4), (4, 5)])
    assert choose_root(T) == 1


def test_level_decomposition_seven_leaf():
    lv = level_decomposition(parse_tree(SEVEN_LEAF), 0)
    assert lv.depth == [0, 1, 2, 3, 3, 2, 1, 2, 2, 1, 2, 2]
    assert lv.children[0] == [1, 6, 9]
    assert [len(s) for s in lv.subtrees] == [4, 10, 12]


@given(trees(min_n=4))
def test_level_decomposition_invariants(T):
    root = choose_root(T)
    if root == PATH_CASE:
        return
    lv = level_decomposition(T, root)
    assert lv.subtrees[-1] == frozenset(range(T.n))
    for a, b in zip(lv.subtrees, lv.subtrees[1:]):
        assert a < b
    for v in range(T.n):
        if v != root:
            assert lv.depth[v] == lv.depth[lv.parent[v]] + 1


@pytest.mark.parametrize("text, tag", [("((())()())", "B"), ("(((()()))()())", "A"),
                                       ("((((()())()))(()())())", "A")])
def test_single_degree2_case(text, tag):
    T = parse_tree(text)
    assert [c.tag for c in classify_deg2(T, choose_root(T))] == [tag]


def test_open_chain_case():
    T = parse_tree("(((()))(())()())")
    cases = classify_deg2(T, choose_root(T))
    assert {c.tag for c in cases} == {"C"}
    assert {c.node for c in cases} == {1, 2, 4}


def test_closed_ring_case():
    # one degree-2 node on each hub edge of the 3-star: the nodes close a ring
    T = parse_tree("((())(())(()))")
    cases = classify_deg2(T, choose_root(T))
    assert [c.tag for c in cases] == ["D", "D", "D"]


@settings(max_examples=60)
@given(trees(min_n=4, max_n=12))
def test_every_degree2_node_gets_one_tag(T):
    root = choose_root(T)
    if root == PATH_CASE:
        return
    cases = classify_deg2(T, root)
    deg2 = sorted(v for v in range(T.n) if T.degree(v) == 2 and v != root)
    assert sorted(c.node for c in cases) == deg2
    assert all(c.tag in "ABCD" for c in cases)
    plan = crease_plan(T, root)
    # every crease joins two distinct nodes
    assert all(u != w for u, w, _ in plan.creases)


def test_small_isomorphism_examples():
    path4 = CombinatorialTree.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    star = CombinatorialTree.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert tree_isomorphic(path4, relabel(path4, [2, 0, 3, 1]))
    assert not tree_isomorphic(star, path4)
