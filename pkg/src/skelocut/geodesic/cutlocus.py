"""Cut locus extraction from a propagated geodesic field.

Inside one face every shortest path is a straight segment from one of the
unfolded source images.  The cut locus restricted to the face is therefore
the set of points where two images tie for the minimum: pieces of
perpendicular bisectors, clipped to the face, to the lit wedges of both
images, and to where no third lit image is strictly closer.  The pieces of
all faces are glued into a tree and polyline arcs between nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ..errors import VerificationError
from ..surface import VERTEX, SurfacePoint, locate, position, vertex_point
from .engine import GeodesicField, cross

INF = math.inf


# -- interval sets on the real line ----------------------------------------

def _halfline(u, v, eps):
    """``{t : u + t v >= -eps}`` as an interval, or None if empty."""
    if abs(v) < 1e-15:
        return (-INF, INF) if u >= -eps else None
    r = (-eps - u) / v
    return (r, INF) if v > 0 else (-INF, r)


def _meet(a, b):
    if a is None or b is None:
        return None
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo < hi else None


def _union(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _intersect(A, B):
    out = []
    for a in A:
        for b in B:
            m = _meet(a, b)
            if m:
                out.append(m)
    return _union(out)


def _subtract(A, cut):
    out = []
    for lo, hi in A:
        if cut[1] <= lo or cut[0] >= hi:
            out.append((lo, hi))
            continue
        if cut[0] > lo:
            out.append((lo, cut[0]))
        if cut[1] < hi:
            out.append((cut[1], hi))
    return out


@dataclass
class Image:
    """Source image in one face with the wedges through which it is lit."""

    sx: float
    sy: float
    cones: list
    T: tuple
    lb: float
    windows: list = field(default_factory=list)

    @property
    def full(self):
        return any(c is None for c in self.cones)


def face_images(F: GeodesicField, f: int) -> list:
    """Group the windows of face ``f`` by their unfolding motion."""
    eps = 10 * F.eps
    images = []
    for w in F.windows[f]:
        for im in images:
            if (abs(im.sx - w.sx) <= eps and abs(im.sy - w.sy) <= eps
                    and abs(im.T[0] - w.T[0]) <= 1e-9 and abs(im.T[1] - w.T[1]) <= 1e-9):
                im.cones.append(w.cone)
                im.windows.append(w)
                im.lb = min(im.lb, w.lb)
                break
        else:
            images.append(Image(w.sx, w.sy, [w.cone], w.T, w.lb, [w]))
    # drop images that cannot be minimal anywhere in the face
    vd = F.vertex_dist
    upper = min(vd[v] + r for v, r in F.ch.radius[f].items())
    return [im for im in images if im.lb <= upper * (1 + 1e-9) + F.eps]


def _lit_intervals(im, mx, my, dx, dy, eps):
    """Parameters ``t`` where ``m + t d`` is lit by the image."""
    if im.full:
        return [(-INF, INF)]
    out = []
    sx, sy = im.sx, im.sy
    for px, py, qx, qy in im.cones:
        d1x, d1y, d2x, d2y = px - sx, py - sy, qx - sx, qy - sy
        n1, n2 = math.hypot(d1x, d1y), math.hypot(d2x, d2y)
        a = _halfline(cross(d1x, d1y, mx - sx, my - sy) / n1, cross(d1x, d1y, dx, dy) / n1, eps)
        b = _halfline(cross(mx - sx, my - sy, d2x, d2y) / n2, cross(dx, dy, d2x, d2y) / n2, eps)
        m = _meet(a, b)
        if m:
            out.append(m)
    return _union(out)


def face_tie_segments(F: GeodesicField, f: int, images=None) -> list:
    """Cut-locus pieces inside face ``f`` as ``(p, q, i, j)`` in face coordinates."""
    P, ch = F.P, F.ch
    eps = F.eps
    images = face_images(F, f) if images is None else images
    face = P.faces[f]
    corners = [ch.coords[f][v] for v in face]
    margin = 2 * eps * max(F.bound if math.isfinite(F.bound) else P.scale, P.scale)
    out = []
    for i in range(len(images)):
        A = images[i]
        for j in range(i + 1, len(images)):
            B = images[j]
            bx, by = B.sx - A.sx, B.sy - A.sy
            sep = math.hypot(bx, by)
            if sep <= 10 * eps:
                continue
            mx, my = (A.sx + B.sx) / 2, (A.sy + B.sy) / 2
            dx, dy = -by / sep, bx / sep
            span = (-INF, INF)
            for k in range(len(corners)):
                (ax, ay), (cx, cy) = corners[k], corners[(k + 1) % len(corners)]
                ex, ey = cx - ax, cy - ay
                ne = math.hypot(ex, ey)
                span = _meet(span, _halfline(cross(ex, ey, mx - ax, my - ay) / ne, cross(ex, ey, dx, dy) / ne, eps))
                if span is None:
                    break
            if span is None or span[1] - span[0] <= eps:
                continue
            cur = _intersect([span], _lit_intervals(A, mx, my, dx, dy, eps))
            if cur:
                cur = _intersect(cur, _lit_intervals(B, mx, my, dx, dy, eps))
            for k, C in enumerate(images):
                if not cur:
                    break
                if k == i or k == j:
                    continue
                # |y - sA|^2 - |y - sC|^2 > margin: C strictly closer
                cxk, cyk = C.sx - A.sx, C.sy - A.sy
                g0 = 2 * (mx * cxk + my * cyk) + (A.sx ** 2 + A.sy ** 2) - (C.sx ** 2 + C.sy ** 2)
                g1 = 2 * (dx * cxk + dy * cyk)
                closer = _halfline(g0 - margin, g1, 0.0)
                if closer is None:
                    continue
                for lit in _lit_intervals(C, mx, my, dx, dy, -eps):
                    m = _meet(closer, lit)
                    if m:
                        cur = _subtract(cur, m)
            for lo, hi in cur:
                if hi - lo > eps:
                    out.append(((mx + lo * dx, my + lo * dy), (mx + hi * dx, my + hi * dy), i, j))
    return out


@dataclass
class CutNode:
    point: SurfacePoint
    position: np.ndarray
    degree: int = 0
    multiplicity: int = 0

    @property
    def is_vertex(self):
        return self.point.kind == VERTEX


@dataclass
class CutArc:
    """Arc between two nodes; ``pieces`` are ``(p, q, edge_or_None, face)``."""

    a: int
    b: int
    points: np.ndarray
    pieces: list
    on_skeleton: bool

    @property
    def length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass
class CutLocus:
    """The cut locus of ``x`` as a tree of nodes and geodesic arcs."""

    P: object
    x: SurfacePoint
    nodes: list
    arcs: list
    field: GeodesicField = field(repr=False, default=None)

    @property
    def is_skeletal(self) -> bool:
        return all(a.on_skeleton for a in self.arcs)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.nodes)))
        g.add_edges_from((a.a, a.b) for a in self.arcs)
        return g

    def covered_edges(self) -> set:
        """Polyhedron edges entirely contained in the cut locus."""
        P = self.P
        spans = {}
        for arc in self.arcs:
            for p, q, e, _ in arc.pieces:
                if e is None:
                    continue
                i, j = P.edges[e]
                a, d = P.vertices[i], P.vertices[j] - P.vertices[i]
                L2 = d @ d
                t0, t1 = sorted(((p - a) @ d / L2, (q - a) @ d / L2))
                spans.setdefault(e, []).append((t0, t1))
        out = set()
        for e, iv in spans.items():
            tol = 100 * P.eps_len / P.edge_length(e)
            merged = []
            for lo, hi in sorted(iv):
                if merged and lo <= merged[-1][1] + tol:
                    merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
                else:
                    merged.append((lo, hi))
            if len(merged) == 1 and merged[0][0] <= tol and merged[0][1] >= 1 - tol:
                out.add(e)
        return out

    def skeletal_edges(self) -> set:
        return self.covered_edges() if self.is_skeletal else set()

    def leaves(self) -> list:
        return [k for k, n in enumerate(self.nodes) if n.degree == 1]

    def to_dict(self) -> dict:
        return {
            "source": self.x.to_dict(),
            "nodes": [{"point": n.point.to_dict(), "position": n.position.tolist(), "degree": n.degree,
                       "multiplicity": n.multiplicity} for n in self.nodes],
            "arcs": [{"a": a.a, "b": a.b, "points": a.points.tolist(), "on_skeleton": a.on_skeleton,
                      "edges": sorted({e for _, _, e, _ in a.pieces if e is not None})} for a in self.arcs],
            "skeletal": self.is_skeletal,
            "covered_edges": [list(self.P.edges[e]) for e in sorted(self.covered_edges())],
        }


def _edge_of(P, f, p, q, eps):
    face = P.faces[f]
    for k in range(len(face)):
        i, j = face[k], face[(k + 1) % len(face)]
        a, b = P.vertices[i], P.vertices[j]
        d = b - a
        L2 = d @ d
        ok = True
        for r in (p, q):
            t = (r - a) @ d / L2
            if not (-1e-6 <= t <= 1 + 1e-6) or np.linalg.norm(a + t * d - r) > eps:
                ok = False
                break
        if ok:
            return P.edge_id(i, j)
    return None


def cut_locus(P, x: SurfacePoint, field_: GeodesicField = None) -> CutLocus:
    """Compute the cut locus of ``x`` on ``P``.

    Raises
    ------
    VerificationError
        The assembled pieces do not form a tree (numerical breakdown).
    """
    F = field_ if field_ is not None else GeodesicField(P, x)
    ch = F.ch
    eps = F.eps
    raw = []
    for f in range(P.n_faces):
        for (p2, q2, _, _) in face_tie_segments(F, f):
            p, q = ch.to3d(f, *p2), ch.to3d(f, *q2)
            raw.append((p, q, f))
    snap = max(1e-7 * P.scale, 100 * eps)
    return _assemble(P, F, raw, snap)


def _assemble(P, F, raw, snap):
    # node clusters, vertices first
    # tie points near a vertex of curvature k are only known to about eps / k,
    # since the two images of x they bisect are k * r apart at distance r
    centers, is_vertex, radius = [], [], []

    def cluster(p):
        for k, c in enumerate(centers):
            if np.linalg.norm(c - p) <= radius[k]:
                return k
        centers.append(p)
        is_vertex.append(None)
        radius.append(snap)
        return len(centers) - 1

    kappa = P.curvatures
    for v in range(P.n_vertices):
        centers.append(P.vertices[v].copy())
        is_vertex.append(v)
        radius.append(min(snap / min(1.0, max(kappa[v], 1e-6)), 1e-3 * P.scale))
    edge_spans, interior = {}, []
    line_eps = 10 * F.eps
    for p, q, f in raw:
        e = _edge_of(P, f, p, q, line_eps)
        if e is None:
            interior.append((p, q, f))
        else:
            i, j = P.edges[e]
            a, d = P.vertices[i], P.vertices[j] - P.vertices[i]
            t0, t1 = sorted(((p - a) @ d / (d @ d), (q - a) @ d / (d @ d)))
            edge_spans.setdefault(e, []).append((t0, t1, f))
    pieces = []
    for e, spans in edge_spans.items():
        i, j = P.edges[e]
        a, d = P.vertices[i], P.vertices[j] - P.vertices[i]
        tol = snap / np.linalg.norm(d)
        merged = []
        for lo, hi, f in sorted(spans):
            if merged and lo <= merged[-1][1] + tol:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi, f])
        for lo, hi, f in merged:
            pieces.append((a + max(lo, 0.0) * d, a + min(hi, 1.0) * d, e, f))
    for p, q, f in interior:
        pieces.append((p, q, None, f))
    for p, q, _, _ in pieces:
        cluster(p)
        cluster(q)
    # split pieces at nodes lying in their interior
    split = []
    for p, q, e, f in pieces:
        d = q - p
        L = np.linalg.norm(d)
        if L <= snap:
            continue
        cuts = [0.0, 1.0]
        for c, rad in zip(centers, radius):
            t = (c - p) @ d / (L * L)
            if rad / L < t < 1 - rad / L and np.linalg.norm(p + t * d - c) <= rad:
                cuts.append(t)
        cuts.sort()
        for t0, t1 in zip(cuts, cuts[1:]):
            split.append((p + t0 * d, p + t1 * d, e, f))
    g = nx.Graph()
    for p, q, e, f in split:
        a, b = cluster(p), cluster(q)
        if a == b:
            continue
        if g.has_edge(a, b):
            if g[a][b]["edge"] is None and e is not None:
                g[a][b].update(edge=e, p=p, q=q, face=f)
            continue
        g.add_edge(a, b, edge=e, face=f, p=p, q=q)
    nodes_used = sorted(g.nodes)
    if not nodes_used:
        raise VerificationError("empty cut locus")
    if not nx.is_tree(g):
        raise VerificationError(
            f"cut locus pieces do not form a tree ({g.number_of_nodes()} nodes, {g.number_of_edges()} arcs)")
    # compress degree-2 points that are not vertices
    keep = [n for n in nodes_used if is_vertex[n] is not None or g.degree(n) != 2]
    index = {n: k for k, n in enumerate(keep)}
    arcs, seen = [], set()
    for start in keep:
        for nb in g.neighbors(start):
            if (start, nb) in seen:
                continue
            path = [start, nb]
            while path[-1] not in index:
                nxt = [m for m in g.neighbors(path[-1]) if m != path[-2]]
                path.append(nxt[0])
            for u, v in zip(path, path[1:]):
                seen.add((u, v))
                seen.add((v, u))
            arc_pieces = []
            for u, v in zip(path, path[1:]):
                data = g[u][v]
                arc_pieces.append((centers[u], centers[v], data["edge"], data["face"]))
            pts = np.array([centers[n] for n in path])
            arcs.append(CutArc(index[path[0]], index[path[-1]], pts, arc_pieces,
                               all(pc[2] is not None for pc in arc_pieces)))
    nodes = []
    for n in keep:
        if is_vertex[n] is not None:
            sp = vertex_point(is_vertex[n])
        else:
            f = next(g[n][m]["face"] for m in g.neighbors(n))
            sp = locate(P, centers[n], f)
        node = CutNode(sp, position(P, sp), g.degree(n))
        node.multiplicity = len(F.geodesics(sp))
        nodes.append(node)
    return CutLocus(P, F.x, nodes, arcs, F)
