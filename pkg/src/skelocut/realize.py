"""Realize a combinatorial tree as the skeletal cut locus of a tapered polyhedron.

The root becomes the apex of a regular pyramid and the source ``x`` sits at
the center of its base.  Nodes of degree at least 3 are grown by truncation
chains: the vertex ``z`` placed on a lateral edge and the chain ``t_i`` on
the base are computed from the images of ``z`` in the plane, so that every
truncation edge ``z t_i`` is a cut locus edge.  Degree-2 nodes start as flat
points on cut locus edges and are then bent into genuine vertices by a
continuation that keeps the cut locus fixed.

The base-configuration constructions for the four degree-2 cases are
available separately as :func:`case_a` to :func:`case_d`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInput,
    InputError,
    InterferenceViolation,
    NonConvex,
    NonPlanarFace,
    RealizationFailure,
    BadTopology,
    SkelocutError,
    UnsupportedPattern,
)
from .geodesic.cutlocus import cut_locus
from .geodesic.verify import verify_skeletal
from .poly import DEFAULT_TOL, Polyhedron, ToleranceConfig, build_polyhedron, doubly_covered_polygon
from .surface import SurfacePoint, edge_point, locate
from .treespec import (
    PATH_CASE,
    CombinatorialTree,
    classify_from_plan,
    choose_root,
    crease_plan,
    tree_isomorphic,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstructionParams:
    """Free parameters of the construction.

    Attributes
    ----------
    z_fraction : float
        Position of a truncation vertex ``z`` on its parent edge ``p v``,
        measured from the base vertex ``v`` (``z = v + f (p - v)``).
    margin_eps : float
        Fraction of the half base edge that the outer chain points must keep
        away from the edge midpoint.
    v3prime_fraction : float
        Case (c): ``v3' = x + f (v3 - x)``.
    v1prime_overshoot : float
        Case (b): ``v1' = x + f (v1 - x)`` with ``f > 1``.
    root_tol, max_iter : float, int
        Bisection stopping rules.
    max_retries : int
        Parameter retries per construction step.
    bend : float
        Dihedral bend (radians) given to the new edges at degree-2 nodes.
    seed : int
        Seed of the alternative child orders tried by the driver.
    tol : ToleranceConfig
    """

    z_fraction: float = 0.5
    margin_eps: float = 0.05
    v3prime_fraction: float = 0.9
    v1prime_overshoot: float = 1.05
    root_tol: float = 1e-12
    max_iter: int = 200
    max_retries: int = 20
    bend: float = 0.05
    seed: int = 0
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self):
        checks = {
            "z_fraction": 0 < self.z_fraction < 1,
            "margin_eps": 0 <= self.margin_eps < 1,
            "v3prime_fraction": 0 < self.v3prime_fraction < 1,
            "v1prime_overshoot": self.v1prime_overshoot > 1,
            "root_tol": self.root_tol > 0,
            "max_iter": self.max_iter >= 1,
            "max_retries": self.max_retries >= 0,
            "bend": 0 < self.bend < 0.5,
        }
        for name, ok in checks.items():
            if not ok:
                raise InputError(f"construction parameter {name} out of range")

    def replace(self, **kw) -> "ConstructionParams":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return ConstructionParams(**d)


@dataclass
class RealizationTrace:
    """Ordered construction steps with their intermediate quantities."""

    steps: list = field(default_factory=list)

    def add(self, kind: str, **quantities) -> dict:
        entry = {"kind": kind, **quantities}
        self.steps.append(entry)
        return entry

    def of_kind(self, kind: str) -> list:
        return [s for s in self.steps if s["kind"] == kind]

    def to_dict(self) -> dict:
        return {"steps": [_jsonable(s) for s in self.steps]}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class Realization:
    """Polyhedron, source and the map from tree nodes to vertices.

    Attributes
    ----------
    polyhedron : Polyhedron
    source : SurfacePoint
    node_map : dict
        Tree node -> vertex index of ``polyhedron``.
    claimed : set
        Edge ids of ``polyhedron`` forming the claimed cut locus.
    trace : RealizationTrace
    tree : CombinatorialTree
    """

    polyhedron: Polyhedron
    source: SurfacePoint
    node_map: dict
    claimed: set
    trace: RealizationTrace
    tree: CombinatorialTree | None = None

    @property
    def claimed_pairs(self) -> list:
        return sorted(self.polyhedron.edges[e] for e in self.claimed)

    def verify(self):
        return verify_skeletal(self.polyhedron, self.source, self.claimed)

    def extracted_tree(self) -> CombinatorialTree:
        """Combinatorics of the computed cut locus as a tree on its vertices."""
        P = self.polyhedron
        C = cut_locus(P, self.source)
        covered = sorted(C.covered_edges())
        verts = sorted({i for e in covered for i in P.edges[e]})
        index = {v: k for k, v in enumerate(verts)}
        return CombinatorialTree.from_edges(len(verts), [(index[i], index[j]) for i, j in (P.edges[e] for e in covered)])

    def to_dict(self) -> dict:
        return {
            "schema": "skelocut.realization/1",
            "polyhedron": self.polyhedron.to_dict(),
            "source": self.source.to_dict(),
            "node_map": {str(k): int(v) for k, v in sorted(self.node_map.items())},
            "claimed": [list(e) for e in self.claimed_pairs],
            "tree": self.tree.to_dict() if self.tree is not None else None,
            "trace": self.trace.to_dict(),
        }


# -- planar helpers ---------------------------------------------------------

def _unit(v):
    return v / np.linalg.norm(v)


def _base_frame(P: Polyhedron, base_face: int):
    """Origin-free frame ``(e1, e2, up)`` of the base plane, ``up`` inward."""
    up = -P.face_normals[base_face]
    pts = P.vertices[list(P.faces[base_face])]
    e1 = _unit(pts[1] - pts[0])
    e2 = np.cross(up, e1)
    return e1, e2, up


def _fold_into_base(z, a, b, x, up):
    """Rotate ``z`` about the base-plane line ``ab`` into the base plane, away from ``x``."""
    d = _unit(b - a)
    foot = a + ((z - a) @ d) * d
    h = np.linalg.norm(z - foot)
    out = np.cross(d, up)
    if out @ (foot - x) < 0:
        out = -out
    return foot + h * _unit(out)


def _ray_segment(x, direction, a, b):
    """Intersection parameter ``s`` of ``x + s d`` with segment ``ab`` (in a plane)."""
    M = np.column_stack([direction, a - b])
    rhs = a - x
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    s, lam = sol
    return s, lam


# -- truncation chain -------------------------------------------------------

def _base_face_at(P: Polyhedron, v: int, p: int) -> int:
    faces = [f for f in P.vertex_fans[v] if p not in P.faces[f]]
    if len(faces) != 1:
        raise UnsupportedPattern(f"vertex {v} must have degree 3 with parent {p}")
    return faces[0]


def truncation_chain(P: Polyhedron, parent_edge, z_fraction: float, k: int,
                     params: ConstructionParams = None, x=None):
    """Replace the base vertex ``v`` of ``parent_edge = (p, v)`` by ``z`` and a chain.

    Parameters
    ----------
    P : Polyhedron
        ``v`` must have degree 3, the third face at ``v`` being the base.
    parent_edge : (int, int)
    z_fraction : float
        ``z = v + z_fraction (p - v)``.
    k : int
        Number of truncation planes; ``z`` gets ``k + 1`` children.
    x : array_like, optional
        Source point in the base plane (default: base centroid).

    Returns
    -------
    (Polyhedron, int, list of int, dict)
        New polyhedron, index of ``z`` (it reuses ``v``'s index), indices of
        ``t_1 .. t_{k+1}`` (appended) and the trace entry.

    Raises
    ------
    InterferenceViolation
        The outer chain points leave the margin band, or the truncated
        solid is not convex.
    """
    params = params or ConstructionParams()
    p, v = parent_edge
    if k < 1:
        raise InputError("a truncation chain needs k >= 1")
    if not 0 < z_fraction < 1:
        raise InputError("z_fraction must lie in (0, 1)")
    base = _base_face_at(P, v, p)
    bface = list(P.faces[base])
    V = P.vertices
    if x is None:
        x = V[bface].mean(axis=0)
    x = np.asarray(x, dtype=float)
    e1, e2, up = _base_frame(P, base)
    i = bface.index(v)
    n1, n2 = bface[i - 1], bface[(i + 1) % len(bface)]

    def ccw(w):
        return np.cross(V[v] - x, V[w] - x) @ up

    v_prev, v_next = (n1, n2) if ccw(n1) < 0 else (n2, n1)
    z = V[v] + z_fraction * (V[p] - V[v])
    z0 = _fold_into_base(z, V[v_prev], V[v], x, up)
    zk1 = _fold_into_base(z, V[v], V[v_next], x, up)
    r = np.linalg.norm(z0 - x)

    def ang(q):
        d = q - x
        return math.atan2(d @ e2, d @ e1)

    phi0 = ang(z0)
    A = (ang(zk1) - phi0) % (2 * math.pi)
    alpha = A / (k + 1)

    def direction(phi):
        return math.cos(phi) * e1 + math.sin(phi) * e2

    zs = [x + r * direction(phi0 + j * alpha) for j in range(k + 2)]
    bis = [direction(phi0 + (j - 0.5) * alpha) for j in range(1, k + 2)]
    ts = [None] * (k + 2)
    s1, lam1 = _ray_segment(x, bis[0], V[v_prev], V[v])
    s2, lam2 = _ray_segment(x, bis[-1], V[v], V[v_next])
    ts[1] = x + s1 * bis[0]
    ts[k + 1] = x + s2 * bis[-1]
    lines = []
    for j in range(1, k + 1):
        mid = (z + zs[j]) / 2
        normal = z - zs[j]
        lines.append({"i": j, "midpoint": mid, "normal": normal})
    for j in range(2, k + 1):
        d = bis[j - 1]
        zi = zs[j]
        denom = 2 * d @ (z - zi)
        if abs(denom) < 1e-300:
            raise InterferenceViolation("mediator plane parallel to the bisector")
        s = ((z - x) @ (z - x) - (zi - x) @ (zi - x)) / denom
        if s <= 0:
            raise InterferenceViolation(f"chain point t_{j} falls behind the source")
        ts[j] = x + s * d
    half_prev = np.linalg.norm(V[v] - V[v_prev]) / 2
    half_next = np.linalg.norm(V[v_next] - V[v]) / 2
    margin_prev = np.linalg.norm(ts[1] - V[v]) - (1 - params.margin_eps) * half_prev
    margin_next = np.linalg.norm(ts[k + 1] - V[v]) - (1 - params.margin_eps) * half_next
    entry = {
        "kind": "truncation_chain", "parent": [int(p), int(v)], "k": k, "z_fraction": z_fraction,
        "x": x, "z": z, "z_images": zs, "r_z": r, "A": A, "alpha": alpha,
        "bisectors": bis, "mediators": lines, "chain": ts[1:],
        "v_prev": V[v_prev], "v": V[v], "v_next": V[v_next],
    }
    if not (0 < lam1 < 1 and 0 < lam2 < 1) or margin_prev > 0 or margin_next > 0:
        raise InterferenceViolation(
            f"outer chain points leave the margin band at vertex {v} (z_fraction={z_fraction})")
    verts = np.array(V, dtype=float)
    verts[v] = z
    t_idx = list(range(len(verts), len(verts) + k + 1))
    verts = np.vstack([verts, np.array(ts[1:])])
    faces = []
    for f, face in enumerate(P.faces):
        face = list(face)
        if v not in face:
            faces.append(face)
            continue
        j = face.index(v)
        before = face[j - 1]
        if f == base:
            seq = t_idx if before == v_prev else t_idx[::-1]
        elif v_prev in face:
            seq = [t_idx[0], v] if before == v_prev else [v, t_idx[0]]
        else:
            seq = [t_idx[-1], v] if before == v_next else [v, t_idx[-1]]
        faces.append(face[:j] + seq + face[j + 1:])
    for j in range(k):
        faces.append([v, t_idx[j], t_idx[j + 1]])
    try:
        Q = build_polyhedron(verts, faces, tol=P.tol)
    except (NonConvex, NonPlanarFace, BadTopology, DegenerateInput) as exc:
        raise InterferenceViolation(f"truncation at vertex {v} breaks convexity: {exc}") from None
    return Q, v, t_idx, entry


# -- reduced tree ------------------------------------------------------------

def base_solid(d: int, tol=DEFAULT_TOL):
    """Regular pyramid with ``d`` lateral edges; regular tetrahedron for ``d = 3``.

    The base has circumradius 1 and is centered at the origin in z = 0.
    """
    from .poly import make_regular_pyramid

    h = math.sqrt(2.0) if d == 3 else 1.0
    return make_regular_pyramid(d, h, tol=tol)


def _realize_hubs(T: CombinatorialTree, plan, params: ConstructionParams, trace: RealizationTrace):
    """Realize the tree with every degree-2 run contracted to a single edge."""
    root = plan.levels.root
    hub_kids = {a: [b for (a2, b) in plan.segments if a2 == a] for a in plan.hubs}
    for a in plan.hubs:
        order = {c: i for i, c in enumerate(plan.order[a])}
        hub_kids[a].sort(key=lambda b: order[_first_step(plan, a, b)])
    d = len(hub_kids[root])
    P = base_solid(d, params.tol)
    trace.add("base", degree=d, vertices=P.vertices.copy())
    vmap = {root: 0}
    for k, b in enumerate(hub_kids[root]):
        vmap[b] = 1 + k
    queue = list(hub_kids[root])
    x = np.zeros(3)
    while queue:
        b = queue.pop(0)
        kids = hub_kids[b]
        if not kids:
            continue
        a = _hub_parent(plan, b)
        frac = params.z_fraction
        for attempt in range(params.max_retries + 1):
            try:
                P, zi, t_idx, entry = truncation_chain(P, (vmap[a], vmap[b]), frac, len(kids) - 1, params, x)
                break
            except InterferenceViolation as exc:
                log.debug("retry truncation at node %d: %s", b, exc)
                frac /= 2
        else:
            raise RealizationFailure(f"truncation at node {b} kept interfering", step=f"truncate:{b}",
                                     trace=trace)
        entry["node"] = b
        entry["attempts"] = attempt + 1
        trace.steps.append(entry)
        for c, t in zip(kids, t_idx):
            vmap[c] = t
        queue.extend(kids)
    return P, vmap


def _first_step(plan, a, b):
    chain = plan.segments[(a, b)]
    return chain[0] if chain else b


def _hub_parent(plan, b):
    for (a, c) in plan.segments:
        if c == b:
            return a
    raise KeyError(b)


# -- degree-2 nodes: flat insertion and bending ------------------------------------

def _split_polygon(cycle, chords):
    """Split a polygon (node cycle) along non-crossing chords."""
    if not chords:
        return [list(cycle)]
    (u, w), rest = chords[0], chords[1:]
    i, j = sorted((cycle.index(u), cycle.index(w)))
    left = cycle[i:j + 1]
    right = cycle[j:] + cycle[:i + 1]
    out = []
    for part in (left, right):
        sub = [c for c in rest if c[0] in part and c[1] in part]
        out += _split_polygon(part, sub)
    return out


class _BendSystem:
    """Residuals of a polyhedron with fixed combinatorics whose cut locus is a given tree.

    Unknowns are vertex coordinates (base vertices keep ``z = 0``); the
    source is the origin.  Residuals: face planarity, equal distance from
    the source of all images of each tree node in the development cut
    along the tree, and prescribed bends of the non-tree interior edges.
    """

    def __init__(self, coords, faces, tree_edges, base_face, bent_edges):
        self.n = len(coords)
        self.faces = [list(f) for f in faces]
        self.base_face = base_face
        self.base = set(faces[base_face])
        self.tree_edges = {frozenset(e) for e in tree_edges}
        self.free = [(v, c) for v in range(self.n) for c in range(3) if not (c == 2 and v in self.base)]
        X = np.asarray(coords, dtype=float)
        center = X.mean(axis=0)
        for k, f in enumerate(self.faces):
            nrm = _newell(X[f])
            if nrm @ (X[f].mean(axis=0) - center) < 0:
                self.faces[k] = f[::-1]
        self._triangulate()
        self.bent = []
        for (u, w) in bent_edges:
            f1 = next(k for k, f in enumerate(self.faces) if _has_directed(f, u, w))
            f2 = next(k for k, f in enumerate(self.faces) if _has_directed(f, w, u))
            self.bent.append((u, w, f1, f2))

    def _triangulate(self):
        tris, owner = [], []
        for k, f in enumerate(self.faces):
            for j in range(1, len(f) - 1):
                tris.append((f[0], f[j], f[j + 1]))
                owner.append(k)
        self.tris, self.owner = tris, owner
        by_edge = {}
        for t, tri in enumerate(tris):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                by_edge.setdefault(frozenset((a, b)), []).append(t)
        roots = [t for t in range(len(tris)) if owner[t] == self.base_face]
        parent = {t: None for t in roots}
        order = []
        queue = list(roots)
        while queue:
            t = queue.pop(0)
            tri = tris[t]
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = frozenset((a, b))
                if key in self.tree_edges:
                    continue
                for s in by_edge[key]:
                    if s not in parent:
                        parent[s] = (t, a, b)
                        order.append(s)
                        queue.append(s)
        if len(parent) != len(tris):
            raise RealizationFailure("cut surface is not connected", step="develop")
        self.dev_order = [(s, *parent[s]) for s in order]
        self._third = []
        for tri in tris:
            m = {}
            for k in range(3):
                a, b, c = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
                m[(a, b)] = m[(b, a)] = c
            self._third.append(m)
        sectors = []
        for y in range(self.n):
            around = [t for t, tri in enumerate(tris) if y in tri]
            uf = {t: t for t in around}

            def find(t):
                while uf[t] != t:
                    uf[t] = uf[uf[t]]
                    t = uf[t]
                return t

            for t in around:
                for s in around:
                    if s <= t:
                        continue
                    shared = set(tris[t]) & set(tris[s])
                    if len(shared) == 2 and frozenset(shared) not in self.tree_edges:
                        uf[find(t)] = find(s)
            reps = sorted({find(t) for t in around})
            for r in reps[1:]:
                sectors.append((y, reps[0], r))
        self.sectors = sectors

    def pack(self, X):
        return np.array([X[v, c] for v, c in self.free])

    def unpack(self, q, template):
        X = np.array(template, dtype=float)
        for (v, c), val in zip(self.free, q):
            X[v, c] = val
        return X

    def develop(self, X):
        """Planar image of every triangle corner: ``img[t][vertex] -> (x, y)``."""
        P = X.tolist()
        img = {}
        for t, tri in enumerate(self.tris):
            if self.owner[t] == self.base_face:
                img[t] = {v: (P[v][0], P[v][1]) for v in tri}
        for s, t, a, b in self.dev_order:
            c = self._third[s][(a, b)]
            d = self._third[t][(a, b)]
            (ax, ay), (bx, by), (dx, dy) = img[t][a], img[t][b], img[t][d]
            pa, pb, pc = P[a], P[b], P[c]
            lab = math.hypot(bx - ax, by - ay)
            lac2 = (pc[0] - pa[0]) ** 2 + (pc[1] - pa[1]) ** 2 + (pc[2] - pa[2]) ** 2
            lbc2 = (pc[0] - pb[0]) ** 2 + (pc[1] - pb[1]) ** 2 + (pc[2] - pb[2]) ** 2
            ex, ey = (bx - ax) / lab, (by - ay) / lab
            s_ = (lac2 - lbc2 + lab * lab) / (2 * lab)
            h = math.sqrt(max(lac2 - s_ * s_, 0.0))
            if (dx - ax) * -ey + (dy - ay) * ex > 0:
                h = -h
            img[s] = {a: (ax, ay), b: (bx, by), c: (ax + s_ * ex - h * ey, ay + s_ * ey + h * ex)}
        return img

    def _index(self):
        if hasattr(self, "_ea"):
            return
        ea, eb, ef = [], [], []
        for k, f in enumerate(self.faces):
            for j in range(len(f)):
                ea.append(f[j])
                eb.append(f[(j + 1) % len(f)])
                ef.append(k)
        self._ea, self._eb, self._ef = np.array(ea), np.array(eb), np.array(ef)
        big = [(k, f) for k, f in enumerate(self.faces) if len(f) > 3]
        self._pv = np.array([v for _, f in big for v in f], dtype=int)
        self._pf = np.array([k for k, f in big for _ in f], dtype=int)
        self._bent = np.array([(u, w, f1, f2) for u, w, f1, f2 in self.bent], dtype=int).reshape(-1, 4)

    def normals(self, X):
        """Unit normals of all faces (area vectors from the edge cross products)."""
        self._index()
        acc = np.zeros((len(self.faces), 3))
        np.add.at(acc, self._ef, np.cross(X[self._ea], X[self._eb]))
        return acc / np.linalg.norm(acc, axis=1)[:, None]

    def bends(self, X):
        self._index()
        N = self.normals(X)
        u, w, f1, f2 = self._bent.T
        e = X[w] - X[u]
        e /= np.linalg.norm(e, axis=1)[:, None]
        n1, n2 = N[f1], N[f2]
        return np.arctan2(np.einsum("ij,ij->i", np.cross(n1, n2), e), np.einsum("ij,ij->i", n1, n2))

    def residual(self, X, bend):
        self._index()
        N = self.normals(X)
        parts = []
        if len(self._pv):
            centers = np.zeros((len(self.faces), 3))
            counts = np.zeros(len(self.faces))
            np.add.at(centers, self._pf, X[self._pv])
            np.add.at(counts, self._pf, 1)
            centers /= np.maximum(counts, 1)[:, None]
            parts.append(np.einsum("ij,ij->i", X[self._pv] - centers[self._pf], N[self._pf]))
        img = self.develop(X)
        parts.append(np.array([math.hypot(*img[t1][y]) - math.hypot(*img[t0][y])
                               for y, t0, t1 in self.sectors]))
        if len(self._bent):
            parts.append(self.bends(X) - np.broadcast_to(bend, (len(self._bent),)))
        return np.concatenate(parts)


def _has_directed(face, a, b):
    m = len(face)
    return any(face[k] == a and face[(k + 1) % m] == b for k in range(m))


def _newell(q):
    nxt = np.roll(q, -1, axis=0)
    return np.array([
        np.sum((q[:, 1] - nxt[:, 1]) * (q[:, 2] + nxt[:, 2])),
        np.sum((q[:, 2] - nxt[:, 2]) * (q[:, 0] + nxt[:, 0])),
        np.sum((q[:, 0] - nxt[:, 0]) * (q[:, 1] + nxt[:, 1])),
    ])


def _bend_angle(X, f1, f2, u, w):
    """Exterior dihedral angle along ``u -> w`` (positive when convex)."""
    n1 = _newell(X[f1])
    n2 = _newell(X[f2])
    n1 /= np.linalg.norm(n1)
    n2 /= np.linalg.norm(n2)
    e = X[w] - X[u]
    e /= np.linalg.norm(e)
    return math.atan2(np.cross(n1, n2) @ e, n1 @ n2)


def _jacobian(system, q, X, bend, r, h=1e-6):
    """Central-difference Jacobian of the residual in the packed coordinates."""
    J = np.empty((len(r), len(q)))
    for j in range(len(q)):
        dq = q.copy()
        dq[j] += h
        rp = system.residual(system.unpack(dq, X), bend)
        dq[j] -= 2 * h
        rm = system.residual(system.unpack(dq, X), bend)
        J[:, j] = (rp - rm) / (2 * h)
    return J


def _newton(system, X, bend, tol, max_iter=40):
    """Gauss-Newton with minimum-norm steps, a singular value cutoff and backtracking."""
    q = system.pack(X)
    r = system.residual(system.unpack(q, X), bend)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        J = _jacobian(system, q, X, bend, r)
        step, *_ = np.linalg.lstsq(J, -r, rcond=1e-7)
        lam, norm0 = 1.0, np.linalg.norm(r)
        while lam > 1e-4:
            r_new = system.residual(system.unpack(q + lam * step, X), bend)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < norm0:
                break
            lam /= 2
        else:
            break
        q = q + lam * step
        r = r_new
    return system.unpack(q, X), r


def _newton_soft(system, X, bend, tol, max_iter=60):
    """Like :func:`_newton` but only the geometric rows are hard constraints.

    The bend rows are matched in the least squares sense inside the null
    space of the geometric Jacobian, which absorbs second order
    incompatibilities between the bend targets.
    """
    q = system.pack(X)
    r = system.residual(system.unpack(q, X), bend)
    nb = len(system.bent)
    m = len(r) - nb

    def merit(res):
        return 1e6 * float(res[:m] @ res[:m]) + float(res[m:] @ res[m:])

    for _ in range(max_iter):
        J = _jacobian(system, q, X, bend, r)
        Jg, Jb = J[:m], J[m:]
        U, S, Vt = np.linalg.svd(Jg)
        rank = int(np.sum(S > 1e-7 * S[0]))
        base = -Vt[:rank].T @ ((U[:, :rank].T @ r[:m]) / S[:rank])
        N = Vt[rank:].T
        z, *_ = np.linalg.lstsq(Jb @ N, -(r[m:] + Jb @ base), rcond=1e-7)
        step = base + N @ z
        if np.max(np.abs(r[:m])) < tol and np.linalg.norm(step) < 1e-12 * max(1.0, np.linalg.norm(q)):
            break
        lam, m0 = 1.0, merit(r)
        while lam > 1e-4:
            r_new = system.residual(system.unpack(q + lam * step, X), bend)
            if np.all(np.isfinite(r_new)) and merit(r_new) < m0:
                break
            lam /= 2
        else:
            break
        q = q + lam * step
        r = r_new
    return system.unpack(q, X), r[:m]


def _flat_layout(T: CombinatorialTree, plan, P: Polyhedron, vmap: dict, fan: str = "flats"):
    """Coordinates per tree node with degree-2 nodes as flat points, faces and new edges.

    ``fan`` selects extra diagonals: ``"none"`` keeps the planned faces,
    ``"flats"`` fans every face with a degree-2 node from that node, and
    ``"all"`` also fans the remaining lateral faces.
    """
    X = np.zeros((T.n, 3))
    for node, vi in vmap.items():
        X[node] = P.vertices[vi]
    for (a, b), chain in plan.segments.items():
        m = len(chain)
        for j, u in enumerate(chain, start=1):
            X[u] = X[a] + j / (m + 1) * (X[b] - X[a])
    faces, new_edges = [], [(u, w) for u, w, _ in plan.creases]
    for k, cyc in enumerate(plan.faces):
        chords = [(u, w) for u, w, f in plan.creases if f == k]
        for sub in _split_polygon(list(cyc), chords):
            flats = [u for u in sub if u in plan.seg_of]
            if len(sub) > 3 and (fan == "all" or (fan == "flats" and flats)):
                hub = flats[0] if flats else sub[0]
                i = sub.index(hub)
                sub = sub[i:] + sub[:i]
                for j in range(1, len(sub) - 1):
                    faces.append([sub[0], sub[j], sub[j + 1]])
                new_edges += [(sub[0], sub[j]) for j in range(2, len(sub) - 1)]
            else:
                faces.append(sub)
    faces.append(list(plan.leaves))
    return X, faces, new_edges


def _bend_direction(system, X):
    """Bend increments that keep the linearized system solvable and cheap.

    Every left null vector of the Jacobian at ``X`` gives a linear condition
    on the bend increments (the other residuals stay zero).  Among the
    increments meeting all of them with every entry at least 1, the one
    needing the smallest coordinate change is chosen, then scaled to a
    largest entry of 1.  Returns None when no such increment exists.
    """
    from scipy.optimize import linprog, minimize

    current = np.array(system.bends(X))
    q = system.pack(X)
    r = system.residual(X, current)
    J = _jacobian(system, q, X, current, r)
    U, S, Vt = np.linalg.svd(J, full_matrices=True)
    rank = int(np.sum(S > 1e-7 * S[0]))
    m = len(system.bent)
    B = U[-m:, rank:].T
    V = np.zeros((0, m))
    if len(B):
        _, Sb, Vb = np.linalg.svd(B)
        V = Vb[:int(np.sum(Sb > 1e-6))]
    # feasibility: largest smallest entry under the conditions
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    A_eq = np.hstack([V, np.zeros((len(V), 1))]) if len(V) else None
    lp = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=np.zeros(len(V)) if len(V) else None,
                 bounds=[(0, 1)] * (m + 1), method="highs")
    if not lp.success or lp.x[-1] <= 1e-6:
        return None
    t0 = lp.x[:m] / lp.x[-1]
    # cheapest increment: coordinate change per unit bend is a pseudo-inverse column
    M = Vt[:rank].T @ ((U[-m:, :rank] / S[:rank]).T)
    cons = [{"type": "eq", "fun": lambda t: V @ t, "jac": lambda t: V}] if len(V) else []
    opt = minimize(lambda t: float(np.sum((M @ t) ** 2)), t0, jac=lambda t: 2 * M.T @ (M @ t),
                   bounds=[(1.0, None)] * m, constraints=cons, method="SLSQP")
    t = opt.x if opt.success and np.all(opt.x >= 1 - 1e-6) else t0
    return t / t.max()


def _bend_degree2(T, plan, P, vmap, params: ConstructionParams, trace: RealizationTrace, fan: str = "none"):
    """Bend the creases while keeping the tree the cut locus.

    Returns node coordinates and oriented faces.
    """
    X, faces, creases = _flat_layout(T, plan, P, vmap, fan)
    system = _BendSystem(X, faces, T.edges, len(faces) - 1, creases)
    tol = 1e-13 * max(1.0, float(np.max(np.abs(X))))
    steps = max(2, int(math.ceil(params.bend / 0.01)))
    delta = params.bend / steps
    history = []
    for s in range(steps):
        t = _bend_direction(system, X)
        if t is None:
            raise RealizationFailure("no convex bending direction for the degree-2 nodes", step="bend",
                                     trace=trace)
        before = np.array(system.bends(X))
        target = before + delta * t
        Xn, r = _newton(system, X, target, tol)
        err = float(np.max(np.abs(r)))
        if err > 1e3 * tol:
            Xn, r = _newton_soft(system, X, target, tol)
            gained = np.array(system.bends(Xn)) - before
            err = float(np.max(np.abs(r)))
            if np.any(gained < 0.25 * delta * t):
                err = max(err, float(np.max(0.25 * delta * t - gained)))
        X = Xn
        history.append({"step": s, "direction": t, "residual": err})
        if err > 1e3 * tol:
            raise RealizationFailure(f"bending continuation stalled at step {s} (residual {err:.3g})",
                                     step="bend", trace=trace)
    trace.add("bend", creases=creases, history=history, bends=system.bends(X))
    return X, system.faces


# -- driver -------------------------------------------------------------------------

def realize_path(T: CombinatorialTree, params: ConstructionParams = None) -> Realization:
    """Doubly covered regular polygon with the source on the rim.

    The path's nodes go to consecutive polygon corners; the source is the
    midpoint of the rim edge joining the two ends of the path.
    """
    params = params or ConstructionParams()
    if T.n < 3:
        raise RealizationFailure(f"a path with {T.n} node(s) is not the cut locus of any polyhedron",
                                 step="path")
    ends = [i for i in range(T.n) if T.degree(i) == 1]
    order, prev = [ends[0]], -1
    while len(order) < T.n:
        nxt = next(w for w in T.adj[order[-1]] if w != prev)
        prev = order[-1]
        order.append(nxt)
    ang = 2 * np.pi * np.arange(T.n) / T.n
    P = doubly_covered_polygon(np.column_stack([np.cos(ang), np.sin(ang)]), tol=params.tol)
    e = P.edge_id(T.n - 1, 0)
    x = edge_point(P, e, 0.5)
    node_map = {node: k for k, node in enumerate(order)}
    claimed = {P.edge_id(k, k + 1) for k in range(T.n - 1)}
    trace = RealizationTrace()
    trace.add("path", n=T.n, source_edge=[T.n - 1, 0])
    return Realization(P, x, node_map, claimed, trace, T)


def _attempts(T: CombinatorialTree, root: int, params: ConstructionParams):
    """Layout and parameter variants tried in order: ``(child order, fan, params)``."""
    rng = np.random.default_rng(params.seed)
    base = [list(T.adj[i]) for i in range(T.n)]
    layouts = [None, [c[::-1] for c in base]] + [[list(rng.permutation(c)) for c in base] for _ in range(4)]
    for order in layouts:
        for fan in ("none", "flats", "all"):
            yield order, fan, params


def _children_order(T, root, neighbor_order):
    if neighbor_order is None:
        return None
    seen, kids = {root}, [[] for _ in range(T.n)]
    stack = [root]
    while stack:
        u = stack.pop()
        for w in neighbor_order[u]:
            if w not in seen:
                seen.add(w)
                kids[u].append(w)
                stack.append(w)
    return kids


def realize_once(T: CombinatorialTree, root: int, params: ConstructionParams, order=None,
                 fan: str = "none") -> Realization:
    """One realization attempt with a fixed layout; verifies the result."""
    trace = RealizationTrace()
    plan = crease_plan(T, root, order)
    cases = classify_from_plan(T, plan)
    trace.add("plan", root=root, leaves=plan.leaves, creases=[(u, w) for u, w, _ in plan.creases],
              cases=[{"node": c.node, "tag": c.tag, "chain": list(c.chain)} for c in cases])
    P, vmap = _realize_hubs(T, plan, params, trace)
    if plan.seg_of:
        X, faces = _bend_degree2(T, plan, P, vmap, params, trace, fan)
    else:
        X = np.zeros((T.n, 3))
        for node, vi in vmap.items():
            X[node] = P.vertices[vi]
        faces = [list(c) for c in plan.faces] + [list(plan.leaves)]
    try:
        Q = build_polyhedron(X, faces, tol=params.tol)
    except SkelocutError as exc:
        raise RealizationFailure(f"realized solid is invalid: {exc}", step="assemble", trace=trace) from None
    base = len(faces) - 1
    x = locate(Q, np.zeros(3), base)
    claimed = {Q.edge_id(i, j) for i, j in T.edges}
    R = Realization(Q, x, {i: i for i in range(T.n)}, claimed, trace, T)
    report = R.verify()
    trace.add("verify", passed=report.passed, failures=report.failures())
    if not report.passed:
        raise RealizationFailure(f"verification failed: {report.failures()[:2]}", step="verify", trace=trace)
    if not tree_isomorphic(R.extracted_tree(), T):
        raise RealizationFailure("computed cut locus is not isomorphic to the tree", step="isomorphism",
                                 trace=trace)
    return R


def realize_tree(T: CombinatorialTree, params: ConstructionParams = None) -> Realization:
    """Polyhedron and source whose cut locus is ``T`` and lies in the skeleton.

    Raises
    ------
    RealizationFailure
        After every parameter and layout variant failed; carries the last
        failing step and its trace.
    """
    params = params or ConstructionParams()
    root = choose_root(T)
    if root == PATH_CASE:
        return realize_path(T, params)
    last = None
    for order, fan, p in _attempts(T, root, params):
        if fan != "none" and not any(T.degree(i) == 2 for i in range(T.n)):
            continue
        try:
            return realize_once(T, root, p, _children_order(T, root, order), fan)
        except RealizationFailure as exc:
            log.info("realization attempt failed at %s: %s", exc.step, exc)
            last = exc
    raise RealizationFailure(f"all realization attempts failed; last: {last}",
                             step=last.step if last else None, trace=last.trace if last else None)


from .cases import case_a, case_b, case_c, case_d  # noqa: E402  (re-exported)
