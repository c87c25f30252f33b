"""Analysis tools: candidate skeletal sources, scans, L(P) probes, HIST checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import SkelocutError, WitnessNotFound
from .geodesic import GeodesicField, cut_locus, verify_skeletal
from .geodesic.engine import charts
from .surface import SurfacePoint, locate, position, vertex_point


@dataclass
class CandidateSource:
    point: SurfacePoint
    position: np.ndarray
    provenance: list  # pairs of polyhedron edges whose extensions meet here


@dataclass
class ExtensionRay:
    """Straight continuation of edge ``edge`` beyond vertex ``vertex`` inside ``face``.

    ``start`` and ``end`` are 2D face coordinates; ``end`` is where the ray
    leaves the face.
    """

    edge: int
    vertex: int
    face: int
    start: tuple
    end: tuple


def extension_direction(P, e: int, v: int):
    """Face and in-face angle of the ray at ``v`` making half the total angle with ``e``.

    Returns ``(face, alpha)`` where ``alpha`` is measured counterclockwise from
    the first edge of ``face`` at ``v``.
    """
    i, j = P.edges[e]
    u = j if v == i else i
    fan = P.vertex_fans[v]
    start = next(k for k, f in enumerate(fan) if P.faces[f][(P.faces[f].index(v) + 1) % len(P.faces[f])] == u)
    target = P.total_angles[v] / 2
    acc = 0.0
    for step in range(len(fan)):
        f = fan[(start + step) % len(fan)]
        a = P.face_angle(f, v)
        if acc + a >= target:
            return f, target - acc
        acc += a
    return fan[start - 1], P.face_angle(fan[start - 1], v)


def _ray_exit(corners, p, d, eps):
    """Largest ``t`` with ``p + t d`` inside the convex polygon."""
    tmax = math.inf
    n = len(corners)
    for k in range(n):
        (ax, ay), (bx, by) = corners[k], corners[(k + 1) % n]
        ex, ey = bx - ax, by - ay
        L = math.hypot(ex, ey)
        u = (ex * (p[1] - ay) - ey * (p[0] - ax)) / L
        w = (ex * d[1] - ey * d[0]) / L
        if w < -1e-15:
            tmax = min(tmax, (u + eps) / -w)
    return tmax


def extension_rays(P) -> list:
    """All ``2E`` edge extensions, each clipped to the first face it enters."""
    ch = charts(P)
    rays = []
    for e, (i, j) in enumerate(P.edges):
        for v in (i, j):
            f, alpha = extension_direction(P, e, v)
            face = P.faces[f]
            k = face.index(v)
            vx, vy = ch.coords[f][v]
            nx_, ny_ = ch.coords[f][face[(k + 1) % len(face)]]
            base = math.atan2(ny_ - vy, nx_ - vx)
            d = (math.cos(base + alpha), math.sin(base + alpha))
            corners = [ch.coords[f][w] for w in face]
            t = _ray_exit(corners, (vx, vy), d, P.eps_len)
            rays.append(ExtensionRay(e, v, f, (vx, vy), (vx + t * d[0], vy + t * d[1])))
    return rays


def _segment_intersection(a, b, c, d, eps):
    rx, ry = b[0] - a[0], b[1] - a[1]
    sx, sy = d[0] - c[0], d[1] - c[1]
    den = rx * sy - ry * sx
    lr, ls = math.hypot(rx, ry), math.hypot(sx, sy)
    if abs(den) <= 1e-12 * lr * ls:
        return None
    t = ((c[0] - a[0]) * sy - (c[1] - a[1]) * sx) / den
    u = ((c[0] - a[0]) * ry - (c[1] - a[1]) * rx) / den
    if t * lr <= 10 * eps or u * ls <= 10 * eps or t > 1 + eps / lr or u > 1 + eps / ls:
        return None
    return (a[0] + t * rx, a[1] + t * ry)


def candidate_sources(P) -> list:
    """Flat points where two edge extensions meet for the first time.

    A flat source ``x`` with a skeletal cut locus is joined to each vertex
    of its face by a segment inside that face, and that segment continues
    a cut-locus edge straight through the vertex.  Extensions are therefore
    intersected inside the first face they enter; points at vertices are
    excluded.
    """
    if P.degenerate:
        return []
    ch = charts(P)
    rays = extension_rays(P)
    by_face = {}
    for r in rays:
        by_face.setdefault(r.face, []).append(r)
    # a ray running along an edge also borders the neighbouring face
    for r in rays:
        face = P.faces[r.face]
        for k in range(len(face)):
            a, b = face[k], face[(k + 1) % len(face)]
            if r.vertex not in (a, b):
                continue
            other = b if a == r.vertex else a
            ox, oy = ch.coords[r.face][other]
            d = math.hypot(ox - r.start[0], oy - r.start[1])
            if math.hypot(r.end[0] - ox, r.end[1] - oy) <= 10 * P.eps_len and d > 0:
                h = P.halfedges[(b, a)]
                p3 = ch.to3d(r.face, *r.end)
                by_face.setdefault(h, []).append(
                    ExtensionRay(r.edge, r.vertex, h, ch.coords[h][r.vertex], ch.to2d(h, p3)))
    found = []
    radius = 10 * P.eps_len
    for f, rs in by_face.items():
        for r1, r2 in itertools.combinations(rs, 2):
            if r1.edge == r2.edge:
                continue
            q = _segment_intersection(r1.start, r1.end, r2.start, r2.end, P.eps_len)
            if q is None:
                continue
            p3 = ch.to3d(f, *q)
            sp = locate(P, p3, f)
            if sp.kind == "vertex":
                continue
            pair = tuple(sorted((r1.edge, r2.edge)))
            for c in found:
                if np.linalg.norm(c.position - p3) <= radius:
                    if pair not in c.provenance:
                        c.provenance.append(pair)
                    break
            else:
                found.append(CandidateSource(sp, position(P, sp), [pair]))
    return found


def is_skeletal(P, x: SurfacePoint):
    """``(skeletal, covered polyhedron edges)`` for the cut locus of ``x``."""
    C = cut_locus(P, x)
    return C.is_skeletal, C.covered_edges()


def edge_count_in_cutlocus(P, x: SurfacePoint) -> int:
    return len(cut_locus(P, x).covered_edges())


@dataclass
class SkeletalRecord:
    point: SurfacePoint
    position: np.ndarray
    provenance: list
    kind: str  # "flat" or "vertex"
    skeletal: bool
    edges: list
    edge_count: int
    verified: bool = None
    error: str = None

    def to_dict(self, P=None) -> dict:
        return {
            "point": self.point.to_dict(), "position": self.position.tolist(), "kind": self.kind,
            "provenance": [list(p) for p in self.provenance], "skeletal": self.skeletal,
            "edges": [list(e) for e in self.edges], "edge_count": self.edge_count,
            "verified": self.verified, "error": self.error,
        }


@dataclass
class SkeletalReport:
    records: list = field(default_factory=list)
    n_candidates: int = 0
    infinite_family: str = None

    @property
    def skeletal_flat(self) -> list:
        return [r for r in self.records if r.skeletal and r.kind == "flat"]

    @property
    def skeletal_vertices(self) -> list:
        return [r for r in self.records if r.skeletal and r.kind == "vertex"]

    @property
    def best_edge_count(self) -> int:
        return max((r.edge_count for r in self.records), default=0)

    def to_dict(self) -> dict:
        return {
            "infinite_family": self.infinite_family,
            "n_candidates": self.n_candidates,
            "n_skeletal_flat": len(self.skeletal_flat),
            "n_skeletal_vertices": len(self.skeletal_vertices),
            "L_lower_bound": self.best_edge_count,
            "records": [r.to_dict() for r in self.records],
        }


def _evaluate(P, sp, provenance, kind, verify=True):
    try:
        C = cut_locus(P, sp)
    except SkelocutError as exc:
        return SkeletalRecord(sp, position(P, sp), provenance, kind, False, [], 0, error=str(exc))
    covered = C.covered_edges()
    rec = SkeletalRecord(sp, position(P, sp), provenance, kind, C.is_skeletal,
                         sorted(P.edges[e] for e in covered), len(covered))
    if rec.skeletal and verify:
        rec.verified = verify_skeletal(P, sp, covered).passed
    return rec


def scan_skeletal(P, verify: bool = True) -> SkeletalReport:
    """Test every candidate flat source and every vertex."""
    if P.degenerate:
        rim = " - ".join(str(v) for v in P.faces[0])
        return SkeletalReport(infinite_family=f"InfiniteFamily: every rim point (rim cycle {rim})")
    cands = candidate_sources(P)
    report = SkeletalReport(n_candidates=len(cands))
    for c in cands:
        report.records.append(_evaluate(P, c.point, c.provenance, "flat", verify))
    for v in range(P.n_vertices):
        report.records.append(_evaluate(P, vertex_point(v), [], "vertex", verify))
    return report


def one_edge_witness(P, e: int, max_halvings: int = 40) -> SurfacePoint:
    """A point ``x`` with edge ``e`` inside its cut locus.

    ``x`` lies on the extension of ``e`` beyond one endpoint, close to it.

    Raises
    ------
    WitnessNotFound
    """
    ch = charts(P)
    rays = [r for r in extension_rays(P) if r.edge == e]
    for r in rays:
        length = math.hypot(r.end[0] - r.start[0], r.end[1] - r.start[1])
        eps = 0.25 * length
        for _ in range(max_halvings):
            t = eps / length
            q = (r.start[0] + t * (r.end[0] - r.start[0]), r.start[1] + t * (r.end[1] - r.start[1]))
            x = locate(P, ch.to3d(r.face, *q), r.face)
            try:
                if e in cut_locus(P, x).covered_edges():
                    return x
            except SkelocutError:
                pass
            eps /= 2
    raise WitnessNotFound(f"no witness found for edge {P.edges[e]}")


def has_hist(G) -> bool:
    """Whether ``G`` has a spanning tree without degree-2 nodes."""
    G = nx.convert_node_labels_to_integers(nx.Graph(G))
    n = G.number_of_nodes()
    if n <= 2:
        return nx.is_connected(G) if n else False
    if not nx.is_connected(G):
        return False
    deg = dict(G.degree)
    # most constrained first: edges at low-degree nodes
    edges = sorted(G.edges, key=lambda uv: (min(deg[uv[0]], deg[uv[1]]), deg[uv[0]] + deg[uv[1]], uv))
    m = len(edges)
    remaining = [0] * n
    for u, v in edges:
        remaining[u] += 1
        remaining[v] += 1
    tdeg = [0] * n
    comp = list(range(n))

    def find(a):
        while comp[a] != a:
            a = comp[a]
        return a

    def feasible(u):
        d, r = tdeg[u], remaining[u]
        if d + r == 0:
            return False
        if d == 2 and r == 0:
            return False
        return True

    def connected_possible(k):
        h = nx.Graph()
        h.add_nodes_from(range(n))
        h.add_edges_from((u, v) for (u, v) in edges[:k] if chosen[(u, v)])
        h.add_edges_from(edges[k:])
        return nx.is_connected(h)

    chosen = {}

    def search(k, count):
        if count == n - 1:
            return all(d != 2 for d in tdeg)
        if k == m:
            return False
        u, v = edges[k]
        remaining[u] -= 1
        remaining[v] -= 1
        ru, rv = find(u), find(v)
        if ru != rv:
            comp[ru] = rv
            tdeg[u] += 1
            tdeg[v] += 1
            chosen[(u, v)] = True
            if feasible(u) and feasible(v) and search(k + 1, count + 1):
                return True
            tdeg[u] -= 1
            tdeg[v] -= 1
            comp[ru] = ru
        chosen[(u, v)] = False
        ok = feasible(u) and feasible(v) and (k % 4 or connected_possible(k + 1))
        if ok and search(k + 1, count):
            return True
        remaining[u] += 1
        remaining[v] += 1
        return False

    return search(0, 0)


def restriction_check(P) -> str:
    G = P.skeleton
    if all(d == 3 for _, d in G.degree) and not has_hist(G):
        return "provably no skeletal cut locus"
    return "inconclusive by this test"


def every_vertex_report(P) -> dict:
    """Check the consequences of all vertices having skeletal cut loci."""
    tol = P.tol.tol_angle
    skeletal = {}
    for v in range(P.n_vertices):
        try:
            skeletal[v] = is_skeletal(P, vertex_point(v))[0]
        except SkelocutError:
            skeletal[v] = False
    checks = {}
    checks["1_triangles"] = all(len(f) == 3 for f in P.faces)
    degrees = [P.skeleton.degree(v) for v in range(P.n_vertices)]
    checks["2_even_degrees"] = all(d % 2 == 0 for d in degrees)
    opposite = True
    for v in range(P.n_vertices):
        angles = [P.face_angle(f, v) for f in P.vertex_fans[v]]
        if len(angles) % 2:
            opposite = False
            break
        k = len(angles) // 2
        if any(abs(angles[i] - angles[i + k]) > tol for i in range(k)):
            opposite = False
    checks["3_opposite_angles"] = opposite and checks["1_triangles"]
    if all(d == 4 for d in degrees):
        sides = []
        acute = True
        for f in P.faces:
            pts = P.vertices[list(f)]
            ls = sorted(float(np.linalg.norm(pts[k] - pts[k - 1])) for k in range(len(f)))
            sides.append(ls)
            if len(f) != 3 or ls[2] ** 2 >= ls[0] ** 2 + ls[1] ** 2:
                acute = False
        congruent = all(np.allclose(s, sides[0], atol=P.eps_len * 10) for s in sides)
        checks["4_octahedron"] = P.n_vertices == 6 and P.n_faces == 8 and congruent and acute
    else:
        checks["4_octahedron"] = None
    passed = all(skeletal.values()) and all(v is not False for v in checks.values())
    return {"all_vertices_skeletal": all(skeletal.values()), "skeletal": skeletal, "checks": checks,
            "passed": passed}
