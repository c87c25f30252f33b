"""Combinatorial trees: parsing, canonical forms, levels and degree-2 cases.

Trees are unlabeled.  The text form nests parentheses, one pair per node,
with the outermost pair the root: ``"(()()())"`` is the star with three
leaves.  The JSON form is ``{"edges": [[i, j], ...], "root": i}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import networkx as nx

from .errors import InputError, ParseError

MAX_DEGREE = 64
PATH_CASE = "path-case"
CASE_TAGS = ("A", "B", "C", "D")


class TreeError(InputError):
    """The edge list does not describe a valid tree."""


@dataclass(frozen=True)
class CombinatorialTree:
    """Unlabeled tree on nodes ``0 .. n-1``.

    Attributes
    ----------
    n : int
    adj : tuple of tuple of int
        Sorted neighbor lists.
    root : int or None
    """

    n: int
    adj: tuple
    root: int | None = None

    @classmethod
    def from_edges(cls, n: int, edges, root: int | None = None) -> "CombinatorialTree":
        if n < 1:
            raise TreeError("a tree needs at least one node")
        adj = [set() for _ in range(n)]
        count = 0
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < n and 0 <= j < n):
                raise TreeError(f"edge ({i}, {j}) has an index out of range")
            if i == j:
                raise TreeError(f"self-loop at node {i}")
            if j in adj[i]:
                raise TreeError(f"parallel edge ({i}, {j})")
            adj[i].add(j)
            adj[j].add(i)
            count += 1
        if count != n - 1:
            raise TreeError(f"a tree on {n} nodes has {n - 1} edges, got {count}")
        seen, stack = {0}, [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != n:
            raise TreeError("edges do not connect all nodes")
        for i, a in enumerate(adj):
            if len(a) > MAX_DEGREE:
                raise TreeError(f"node {i} has degree {len(a)} > {MAX_DEGREE}")
        if root is not None and not 0 <= root < n:
            raise TreeError(f"root {root} out of range")
        return cls(n, tuple(tuple(sorted(a)) for a in adj), root)

    @property
    def edges(self) -> list:
        return [(i, j) for i in range(self.n) for j in self.adj[i] if i < j]

    def degree(self, i: int) -> int:
        return len(self.adj[i])

    @property
    def degrees(self) -> list:
        return [len(a) for a in self.adj]

    @property
    def leaves(self) -> list:
        return [i for i in range(self.n) if len(self.adj[i]) <= 1]

    def with_root(self, root: int | None) -> "CombinatorialTree":
        return CombinatorialTree(self.n, self.adj, root)

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(self.edges)
        return G

    def to_dict(self) -> dict:
        return {"edges": [list(e) for e in self.edges], "root": self.root}


# -- text and JSON forms ------------------------------------------------------

def parse_tree(text) -> CombinatorialTree:
    """Parse the parenthesis form; nodes are numbered in preorder.

    Raises
    ------
    ParseError
        With the byte offset of the first offending character.
    """
    data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    edges, stack = [], []
    n = 0
    done = False
    for off, ch in enumerate(data):
        if ch in b" \t\r\n":
            continue
        if ch == ord("("):
            if done:
                raise ParseError("content after the root node", off)
            if stack:
                edges.append((stack[-1], n))
            stack.append(n)
            n += 1
        elif ch == ord(")"):
            if not stack:
                raise ParseError("unbalanced ')'", off)
            stack.pop()
            done = not stack
        else:
            raise ParseError(f"stray character {chr(ch)!r}", off)
    if stack:
        raise ParseError("unclosed '('", len(data))
    if n == 0:
        raise ParseError("empty tree", len(data))
    return CombinatorialTree.from_edges(n, edges, root=0)


def _children(T: CombinatorialTree, root: int) -> tuple:
    parent = [-1] * T.n
    order = [root]
    parent[root] = root
    kids = [[] for _ in range(T.n)]
    for u in order:
        for w in T.adj[u]:
            if parent[w] == -1:
                parent[w] = u
                kids[u].append(w)
                order.append(w)
    parent[root] = -1
    return parent, kids, order


def _encodings(T: CombinatorialTree, root: int) -> list:
    """AHU strings of every rooted subtree, children sorted."""
    _, kids, order = _children(T, root)
    enc = [""] * T.n
    for u in reversed(order):
        enc[u] = "(" + "".join(sorted(enc[w] for w in kids[u])) + ")"
    return enc


def serialize_tree(T: CombinatorialTree, root: int | None = None) -> str:
    """Canonical parenthesis form rooted at ``root`` (default ``T.root`` or 0)."""
    r = root if root is not None else (T.root if T.root is not None else 0)
    return _encodings(T, r)[r]


def tree_from_json(data) -> CombinatorialTree:
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
    if not isinstance(data, dict) or "edges" not in data:
        raise ParseError("tree JSON needs an 'edges' list")
    edges = data["edges"]
    try:
        n = 1 + max((max(int(i), int(j)) for i, j in edges), default=0)
    except (TypeError, ValueError):
        raise ParseError("edges must be pairs of integers") from None
    return CombinatorialTree.from_edges(n, edges, data.get("root"))


def tree_to_json(T: CombinatorialTree) -> str:
    return json.dumps(T.to_dict(), sort_keys=True)


def load_tree(text: str) -> CombinatorialTree:
    """Accept either the parenthesis form or the JSON form."""
    s = text.strip()
    if s.startswith("{"):
        return tree_from_json(s)
    return parse_tree(text)


# -- canonical comparison -----------------------------------------------------

def tree_centers(T: CombinatorialTree) -> list:
    """One or two centers, found by peeling leaves."""
    if T.n <= 2:
        return list(range(T.n))
    deg = T.degrees
    layer = [i for i in range(T.n) if deg[i] == 1]
    remaining = T.n
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for u in layer:
            for w in T.adj[u]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    return sorted(layer)


def canonical_form(T: CombinatorialTree) -> str:
    """Smallest AHU encoding over the centers; equal iff isomorphic."""
    return min(_encodings(T, c)[c] for c in tree_centers(T))


def tree_isomorphic(T1: CombinatorialTree, T2: CombinatorialTree) -> bool:
    if T1.n != T2.n or sorted(T1.degrees) != sorted(T2.degrees):
        return False
    return canonical_form(T1) == canonical_form(T2)


# -- roots and levels -----------------------------------------------------------

def choose_root(T: CombinatorialTree):
    """Lowest-index node of maximum degree if that degree is at least 3.

    Returns :data:`PATH_CASE` when every node has degree at most 2.
    """
    best = max(T.degrees)
    if best < 3:
        return PATH_CASE
    return T.degrees.index(best)


@dataclass
class LevelDecomposition:
    """Depths from the root and the nested subtrees ``T_k``.

    ``subtrees[k - 1]`` holds the nodes at distance at most ``k``.
    """

    root: int
    depth: list
    parent: list
    children: list
    subtrees: list = field(default_factory=list)

    @property
    def max_level(self) -> int:
        return max(self.depth)

    def level(self, k: int) -> list:
        return [i for i, d in enumerate(self.depth) if d == k]

    def branch_of(self, i: int) -> int:
        """The root child whose subtree contains ``i`` (``-1`` for the root)."""
        if i == self.root:
            return -1
        while self.parent[i] != self.root:
            i = self.parent[i]
        return i


def level_decomposition(T: CombinatorialTree, root: int) -> LevelDecomposition:
    parent, kids, order = _children(T, root)
    depth = [0] * T.n
    for u in order[1:]:
        depth[u] = depth[parent[u]] + 1
    top = max(depth)
    subtrees = [frozenset(i for i in range(T.n) if depth[i] <= k) for k in range(1, top + 1)]
    return LevelDecomposition(root, depth, parent, kids, subtrees)


# -- planar layout and degree-2 cases ---------------------------------------------

@dataclass(frozen=True)
class Deg2Case:
    """Case tag of a degree-2 node.

    ``targets`` are the far ends of the two new polyhedron edges at the node
    (one per side), ``chain`` the group of degree-2 nodes handled together.
    """

    node: int
    tag: str
    chain: tuple
    targets: tuple = ()


@dataclass
class CreasePlan:
    """Combinatorial layout shared by the classifier and the realizer.

    Attributes
    ----------
    levels : LevelDecomposition
    order : list
        Children of every node in planar (counterclockwise) order.
    leaves : list
        Leaves in cyclic order around the root.
    hubs : set
        Nodes kept by the degree-2 contraction (the root and every node of
        degree other than 2).
    segments : dict
        ``(a, b) -> [u1, ..., um]``: hub edge from parent ``a`` to child
        ``b`` and the degree-2 nodes on it, ordered from ``a``.
    faces : list
        Lateral face cycles of the contracted realization with the
        degree-2 nodes inserted, one per pair of consecutive leaves.
    creases : list
        New polyhedron edges ``(u, w, face index)``.
    """

    levels: LevelDecomposition
    order: list
    leaves: list
    hubs: set
    segments: dict
    faces: list
    creases: list
    seg_of: dict


def crease_plan(T: CombinatorialTree, root: int, order=None) -> CreasePlan:
    """Decide where every degree-2 node gets its extra polyhedron edges.

    Degree-2 nodes start as flat points on the hub edges of the contracted
    tree.  Inside each lateral face, the degree-2 nodes met along the face
    boundary are grouped by hub edge; every node of a group is joined to
    the first node of the next group.  A face with a single group joins its
    nodes to the vertex following the far end of their hub edge.
    """
    if T.degree(root) < 3:
        raise TreeError("the root needs degree at least 3")
    lv = level_decomposition(T, root)
    kids = [list(c) for c in (order if order is not None else lv.children)]
    hubs = {i for i in range(T.n) if T.degree(i) != 2} | {root}
    segments, seg_of = {}, {}
    for a in sorted(hubs):
        for c in kids[a]:
            chain, b = [], c
            while b not in hubs:
                chain.append(b)
                b = kids[b][0]
            segments[(a, b)] = chain
            for u in chain:
                seg_of[u] = (a, b)
    leaves = []
    stack = [root]
    while stack:
        u = stack.pop()
        if not kids[u] and u != root:
            leaves.append(u)
        stack.extend(reversed(kids[u]))
    faces, creases = [], []
    for k, l0 in enumerate(leaves):
        l1 = leaves[(k + 1) % len(leaves)]
        up = _path_to_root(lv, l0)
        down = _path_to_root(lv, l1)
        while len(up) > 1 and len(down) > 1 and up[-2] == down[-2]:
            up.pop()
            down.pop()
        cycle = up + down[::-1][1:]
        faces.append(cycle)
        flats = [u for u in cycle if u not in hubs]
        groups = []
        for u in flats:
            if groups and seg_of[groups[-1][-1]] == seg_of[u]:
                groups[-1].append(u)
            else:
                groups.append([u])
        if len(groups) > 1 and seg_of[groups[0][0]] == seg_of[groups[-1][-1]]:
            groups[0] = groups.pop() + groups[0]
        if len(groups) == 1:
            a, b = seg_of[groups[0][0]]
            i, j = cycle.index(a), cycle.index(b)
            step = 1 if cycle[(i + 1) % len(cycle)] in groups[0] + [b] else -1
            w = cycle[(j + step) % len(cycle)]
            creases += [(u, w, k) for u in groups[0]]
        elif groups:
            for g, grp in enumerate(groups):
                target = groups[(g + 1) % len(groups)][0]
                creases += [(u, target, k) for u in grp if u != target]
    return CreasePlan(lv, kids, leaves, hubs, segments, faces, _dedupe_creases(creases), seg_of)


def _path_to_root(lv: LevelDecomposition, i: int) -> list:
    out = [i]
    while lv.parent[out[-1]] != -1:
        out.append(lv.parent[out[-1]])
    return out


def _dedupe_creases(creases) -> list:
    seen, out = set(), []
    for u, w, f in creases:
        key = (min(u, w), max(u, w), f)
        if key not in seen:
            seen.add(key)
            out.append((u, w, f))
    return out


def classify_deg2(T: CombinatorialTree, root: int, order=None) -> list:
    """Tag every degree-2 node of the rooted tree with a case A-D.

    The tag follows where the node's two new polyhedron edges end: on
    other degree-2 nodes at both sides (D, a closed ring), at one side (C,
    an open chain), or on neither (A when the degree-2 run below the node
    ends at a node of degree at least 3, B when it ends at a leaf).
    """
    plan = crease_plan(T, root, order)
    return classify_from_plan(T, plan)


def classify_from_plan(T: CombinatorialTree, plan: CreasePlan) -> list:
    out_targets = {}
    for u, w, _ in plan.creases:
        out_targets.setdefault(u, []).append(w)
    flats = set(plan.seg_of)
    ring = nx.Graph()
    ring.add_nodes_from(flats)
    ring.add_edges_from((u, w) for u, w, _ in plan.creases if w in flats)
    cases = []
    for u in sorted(flats):
        targets = tuple(out_targets.get(u, ()))
        for w, v, _ in plan.creases:
            if v == u and w in flats and w not in targets:
                targets += (w,)
        n_flat = sum(1 for w in set(targets) if w in flats)
        seg = plan.seg_of[u]
        if n_flat >= 2 and _sides_flat(plan, u, flats):
            tag = "D"
        elif n_flat >= 1:
            tag = "C"
        else:
            tag = "A" if T.degree(seg[1]) >= 3 else "B"
        if tag in ("C", "D"):
            chain = tuple(sorted(nx.node_connected_component(ring, u)))
        else:
            chain = tuple(plan.segments[seg])
        cases.append(Deg2Case(u, tag, chain, tuple(sorted(set(targets)))))
    return cases


def _sides_flat(plan: CreasePlan, u: int, flats: set) -> bool:
    """Whether both faces beside ``u`` join it to another degree-2 node."""
    sides = 0
    for k, cyc in enumerate(plan.faces):
        if u not in cyc:
            continue
        if any((a == u and b in flats) or (b == u and a in flats) for a, b, f in plan.creases if f == k):
            sides += 1
    return sides >= 2
