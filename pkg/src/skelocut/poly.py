"""Convex polyhedron kernel: representation, validation, hull and truncation.

A :class:`Polyhedron` stores vertex coordinates and face cycles oriented
counterclockwise when seen from outside.  Degenerate polyhedra (doubly
covered convex polygons) store the polygon twice, once per side, so the
same half-edge machinery serves both cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    BadTopology,
    DegenerateInput,
    NonConvex,
    NonConvexPolygon,
    NonPlanarFace,
    TangentPlane,
)


@dataclass(frozen=True)
class ToleranceConfig:
    """Absolute tolerances for a model of unit bounding-box diameter.

    Polyhedra scale them by their own diameter, see :attr:`Polyhedron.scale`.
    """

    tol_plane: float = 1e-9
    tol_len: float = 1e-9
    tol_angle: float = 1e-8

    def __post_init__(self):
        for name in ("tol_plane", "tol_len", "tol_angle"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def halved(self) -> "ToleranceConfig":
        return ToleranceConfig(self.tol_plane / 2, self.tol_len / 2, self.tol_angle / 2)


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class Plane:
    """Plane ``normal . p = offset`` with a unit normal.

    Truncation keeps the closed halfspace ``normal . p <= offset``.
    """

    normal: tuple
    offset: float

    @classmethod
    def from_normal(cls, normal, point) -> "Plane":
        n = np.asarray(normal, dtype=float)
        length = np.linalg.norm(n)
        if length == 0:
            raise DegenerateInput("zero plane normal")
        n = n / length
        return cls(tuple(n), float(n @ np.asarray(point, dtype=float)))

    @classmethod
    def through(cls, p0, p1, p2) -> "Plane":
        p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))
        return cls.from_normal(np.cross(p1 - p0, p2 - p0), p0)

    def signed_distance(self, points):
        return np.asarray(points, dtype=float) @ np.asarray(self.normal) - self.offset

    def flipped(self) -> "Plane":
        return Plane(tuple(-np.asarray(self.normal)), -self.offset)

    def oriented_away_from(self, point) -> "Plane":
        """Return the plane oriented so that ``point`` lies on the kept side."""
        return self.flipped() if self.signed_distance(point) > 0 else self


def newell_normal(points: np.ndarray) -> np.ndarray:
    nxt = np.roll(points, -1, axis=0)
    n = np.array([
        np.sum((points[:, 1] - nxt[:, 1]) * (points[:, 2] + nxt[:, 2])),
        np.sum((points[:, 2] - nxt[:, 2]) * (points[:, 0] + nxt[:, 0])),
        np.sum((points[:, 0] - nxt[:, 0]) * (points[:, 1] + nxt[:, 1])),
    ])
    length = np.linalg.norm(n)
    if length == 0:
        raise DegenerateInput("face with zero area")
    return n / length


class Polyhedron:
    """Validated convex polyhedron with derived incidence data.

    Parameters
    ----------
    vertices : (n, 3) array_like
    faces : sequence of index cycles, counterclockwise from outside
    degenerate : bool
        True for a doubly covered polygon (two mirror faces).
    tol : ToleranceConfig

    Use :func:`build_polyhedron` rather than the constructor directly;
    the constructor performs no validation.
    """

    def __init__(self, vertices, faces, degenerate=False, tol=DEFAULT_TOL):
        self.vertices = np.array(vertices, dtype=float)
        self.vertices.setflags(write=False)
        self.faces = tuple(tuple(int(i) for i in f) for f in faces)
        self.degenerate = bool(degenerate)
        self.tol = tol

    # -- sizes and scaled tolerances ---------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def scale(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(max(np.linalg.norm(hi - lo), 1e-300))

    @property
    def eps_plane(self) -> float:
        return self.tol.tol_plane * self.scale

    @property
    def eps_len(self) -> float:
        return self.tol.tol_len * self.scale

    # -- incidence ----------------------------------------------------------
    @cached_property
    def halfedges(self) -> dict:
        """Map directed edge ``(i, j)`` to the face that contains it."""
        out = {}
        for fi, face in enumerate(self.faces):
            for k in range(len(face)):
                he = (face[k], face[(k + 1) % len(face)])
                if he in out:
                    raise BadTopology(f"half-edge {he} used twice")
                out[he] = fi
        return out

    @cached_property
    def edges(self) -> list:
        return sorted({(min(i, j), max(i, j)) for (i, j) in self.halfedges})

    @cached_property
    def edge_index(self) -> dict:
        return {e: k for k, e in enumerate(self.edges)}

    def edge_id(self, i: int, j: int) -> int:
        return self.edge_index[(min(i, j), max(i, j))]

    @cached_property
    def edge_faces(self) -> list:
        """For edge ``(i, j)`` with ``i < j``: faces containing ``i->j`` and ``j->i``."""
        return [(self.halfedges[(i, j)], self.halfedges[(j, i)]) for (i, j) in self.edges]

    @cached_property
    def face_edges(self) -> list:
        return [[self.edge_id(f[k], f[(k + 1) % len(f)]) for k in range(len(f))] for f in self.faces]

    @cached_property
    def face_normals(self) -> np.ndarray:
        return np.array([newell_normal(self.vertices[list(f)]) for f in self.faces])

    @cached_property
    def face_offsets(self) -> np.ndarray:
        return np.array([
            float(np.mean(self.vertices[list(f)] @ n)) for f, n in zip(self.faces, self.face_normals)
        ])

    @cached_property
    def vertex_fans(self) -> list:
        """Faces around each vertex in counterclockwise order seen from outside."""
        fans = []
        for v in range(self.n_vertices):
            start = next(f for f, face in enumerate(self.faces) if v in face)
            fan, f = [], start
            while True:
                fan.append(f)
                face = self.faces[f]
                prev = face[face.index(v) - 1]
                f = self.halfedges[(v, prev)]
                if f == start:
                    break
                if len(fan) > self.n_faces:
                    raise BadTopology(f"vertex {v} is not a manifold vertex")
            fans.append(fan)
        return fans

    def face_angle(self, f: int, v: int) -> float:
        face = self.faces[f]
        k = face.index(v)
        p = self.vertices[v]
        a = self.vertices[face[(k + 1) % len(face)]] - p
        b = self.vertices[face[k - 1]] - p
        return float(np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b))

    @cached_property
    def total_angles(self) -> np.ndarray:
        return np.array([sum(self.face_angle(f, v) for f in self.vertex_fans[v]) for v in range(self.n_vertices)])

    @property
    def curvatures(self) -> np.ndarray:
        return 2 * np.pi - self.total_angles

    def face_area(self, f: int) -> float:
        pts = self.vertices[list(self.faces[f])]
        return 0.5 * float(np.linalg.norm(np.sum(np.cross(pts, np.roll(pts, -1, axis=0)), axis=0)))

    @cached_property
    def surface_area(self) -> float:
        return sum(self.face_area(f) for f in range(self.n_faces))

    @cached_property
    def skeleton(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_vertices))
        g.add_edges_from(self.edges)
        return g

    def edge_length(self, e: int) -> float:
        i, j = self.edges[e]
        return float(np.linalg.norm(self.vertices[i] - self.vertices[j]))

    def find_vertex(self, point, eps=None) -> int:
        """Index of the vertex at ``point``; ``KeyError`` if there is none."""
        eps = 1e3 * self.eps_len if eps is None else eps
        d = np.linalg.norm(self.vertices - np.asarray(point, dtype=float), axis=1)
        k = int(np.argmin(d))
        if d[k] > eps:
            raise KeyError(f"no vertex near {point}")
        return k

    def find_edge(self, p, q) -> int:
        return self.edge_id(self.find_vertex(p), self.find_vertex(q))

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "faces": [list(f) for f in self.faces],
            "degenerate": self.degenerate,
        }

    def __repr__(self):
        kind = "degenerate " if self.degenerate else ""
        return f"<{kind}Polyhedron V={self.n_vertices} E={self.n_edges} F={self.n_faces}>"


def polyhedron_from_dict(data: dict, tol=DEFAULT_TOL) -> Polyhedron:
    return build_polyhedron(data["vertices"], data["faces"], tol=tol, degenerate=data.get("degenerate"))


def build_polyhedron(vertices, faces, tol=DEFAULT_TOL, degenerate=None) -> Polyhedron:
    """Validate and assemble a polyhedron.

    Face orientation is normalized to counterclockwise from outside.  When
    ``degenerate`` is None it is inferred (all vertices coplanar).

    Raises
    ------
    NonPlanarFace, NonConvex, BadTopology
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 3 or not np.all(np.isfinite(verts)):
        raise DegenerateInput("vertices must be a finite (n, 3) array")
    faces = [list(f) for f in faces]
    for f in faces:
        if len(f) < 3:
            raise BadTopology("face with fewer than 3 vertices")
        if len(set(f)) != len(f):
            raise BadTopology(f"face {f} repeats a vertex")
        if min(f) < 0 or max(f) >= len(verts):
            raise BadTopology(f"face {f} has an index out of range")
    used = {i for f in faces for i in f}
    if used != set(range(len(verts))):
        raise BadTopology("every vertex must belong to a face")
    scale = float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))
    eps = tol.tol_plane * scale
    centered = verts - verts.mean(axis=0)
    flat = np.linalg.svd(centered, compute_uv=False)[2] <= eps
    if degenerate is None:
        degenerate = bool(flat)
    if not degenerate and len(verts) < 4:
        raise DegenerateInput("a solid needs at least 4 vertices")

    if not degenerate:
        center = verts.mean(axis=0)
        for k, f in enumerate(faces):
            n = newell_normal(verts[f])
            if n @ (verts[f].mean(axis=0) - center) < 0:
                faces[k] = f[::-1]
    P = Polyhedron(verts, faces, degenerate, tol)
    _validate(P)
    return P


def _validate(P: Polyhedron) -> None:
    eps = P.eps_plane
    he = P.halfedges
    for (i, j) in he:
        if (j, i) not in he:
            raise BadTopology(f"edge {(i, j)} does not border exactly two faces")
    V, E, F = P.n_vertices, P.n_edges, P.n_faces
    if V - E + F != 2:
        raise BadTopology(f"Euler characteristic {V - E + F} != 2")
    if P.degenerate and F != 2:
        raise BadTopology("a degenerate polyhedron has exactly two faces")
    for f, face in enumerate(P.faces):
        d = P.vertices[list(face)] @ P.face_normals[f] - P.face_offsets[f]
        if np.max(np.abs(d)) > eps:
            raise NonPlanarFace(f"face {f} deviates {np.max(np.abs(d)):.3g} from its plane")
    s = P.vertices @ P.face_normals.T - P.face_offsets
    if np.max(s) > eps:
        v, f = np.unravel_index(np.argmax(s), s.shape)
        raise NonConvex(f"vertex {v} lies {s[v, f]:.3g} outside face {f}")
    for f, face in enumerate(P.faces):
        pts = P.vertices[list(face)]
        n = P.face_normals[f]
        for k in range(len(face)):
            a, b, c = pts[k - 1], pts[k], pts[(k + 1) % len(face)]
            turn = np.cross(b - a, c - b) @ n
            if turn <= eps * max(np.linalg.norm(b - a), np.linalg.norm(c - b)):
                raise NonConvex(f"face {f} is not strictly convex at vertex {face[k]}")
    if np.any(P.total_angles >= 2 * np.pi - P.tol.tol_angle):
        raise NonConvex("a vertex has total angle 2*pi (flat vertex)")


# -- constructions --------------------------------------------------------

def _sort_polygon(points2d: np.ndarray) -> list:
    c = points2d.mean(axis=0)
    ang = np.arctan2(points2d[:, 1] - c[1], points2d[:, 0] - c[0])
    return list(np.argsort(ang))


def doubly_covered_polygon(polygon, tol=DEFAULT_TOL) -> Polyhedron:
    """Degenerate polyhedron from a planar convex polygon given in order.

    Accepts 2D points (placed in the z=0 plane) or coplanar 3D points.

    Raises
    ------
    NonConvexPolygon
    """
    pts = np.asarray(polygon, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise NonConvexPolygon("need at least 3 points")
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    n = newell_normal(pts)
    scale = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    if np.max(np.abs((pts - pts[0]) @ n)) > tol.tol_plane * scale:
        raise NonConvexPolygon("polygon is not planar")
    m = len(pts)
    for k in range(m):
        a, b, c = pts[k - 1], pts[k], pts[(k + 1) % m]
        if np.cross(b - a, c - b) @ n <= tol.tol_plane * scale * np.linalg.norm(c - b):
            raise NonConvexPolygon(f"polygon is not strictly convex at point {k}")
    top = list(range(m))
    return build_polyhedron(pts, [top, top[::-1]], tol=tol, degenerate=True)


def convex_hull(points, tol=DEFAULT_TOL) -> Polyhedron:
    """Convex hull with coplanar facets merged.

    Coplanar input yields a doubly covered polygon.

    Raises
    ------
    DegenerateInput
        Fewer than 3 affinely independent points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
        raise DegenerateInput("need at least 3 points in 3D")
    pts = _dedupe(pts, tol.tol_len * _diameter(pts))
    scale = _diameter(pts)
    centered = pts - pts.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered)
    if len(sv) < 2 or sv[1] <= tol.tol_plane * scale:
        raise DegenerateInput("points are collinear")
    if len(pts) < 4 or sv[2] <= tol.tol_plane * scale:
        uv = centered @ vt[:2].T
        try:
            hull2 = ConvexHull(uv)
        except QhullError as exc:
            raise DegenerateInput(str(exc)) from exc
        idx = _drop_collinear(pts, list(hull2.vertices), vt[2], tol.tol_plane * scale)
        return doubly_covered_polygon(pts[idx], tol)
    try:
        return _hull_solid(pts, tol, scale)
    except (BadTopology, NonPlanarFace, DegenerateInput):
        pass
    # near-redundant points give qhull sliver facets; drop them and retry
    keep = _essential_points(pts, tol.tol_plane * scale)
    try:
        return _hull_solid(pts[keep], tol, scale)
    except (BadTopology, NonPlanarFace) as exc:
        raise DegenerateInput(f"hull is numerically unstable: {exc}") from exc


def _essential_points(pts: np.ndarray, eps: float) -> np.ndarray:
    """Indices of hull vertices lying farther than ``eps`` outside the hull of the rest."""
    keep = list(ConvexHull(pts).vertices)
    changed = True
    while changed and len(keep) > 4:
        changed = False
        for i in sorted(keep):
            rest = [j for j in keep if j != i]
            try:
                eq = ConvexHull(pts[rest]).equations
            except QhullError:
                continue
            if np.max(eq[:, :3] @ pts[i] + eq[:, 3]) <= eps:
                keep = rest
                changed = True
                break
    return np.array(sorted(keep))


def _hull_solid(pts: np.ndarray, tol, scale: float) -> Polyhedron:
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInput(str(exc)) from exc

    n_tri = len(hull.simplices)
    normals = hull.equations[:, :3]
    parent = list(range(n_tri))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    cos_tol = np.cos(tol.tol_angle)
    eps = tol.tol_plane * scale
    for t in range(n_tri):
        for u in hull.neighbors[t]:
            if u < t:
                continue
            coplanar = normals[t] @ normals[u] >= cos_tol or np.all(
                np.abs(pts[hull.simplices[u]] @ normals[t] + hull.equations[t, 3]) <= eps
            )
            if coplanar:
                parent[find(t)] = find(u)

    groups = {}
    for t in range(n_tri):
        groups.setdefault(find(t), []).append(t)
    faces = []
    for tris in groups.values():
        n = np.mean(normals[tris], axis=0)
        n /= np.linalg.norm(n)
        directed = set()
        for t in tris:
            a, b, c = hull.simplices[t]
            if np.cross(pts[b] - pts[a], pts[c] - pts[a]) @ normals[t] < 0:
                b, c = c, b
            directed.update({(a, b), (b, c), (c, a)})
        boundary = {a: b for (a, b) in directed if (b, a) not in directed}
        start = min(boundary)
        cycle, v = [start], boundary[start]
        while v != start:
            cycle.append(v)
            v = boundary[v]
            if len(cycle) > len(boundary):
                raise DegenerateInput("could not trace a hull face boundary")
        faces.append(_drop_collinear(pts, cycle, n, eps))
    used = sorted({i for f in faces for i in f})
    remap = {old: new for new, old in enumerate(used)}
    faces = [[remap[i] for i in f] for f in faces]
    return build_polyhedron(pts[used], faces, tol=tol, degenerate=False)


def _diameter(pts: np.ndarray) -> float:
    return float(max(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)), 1e-300))


def _dedupe(pts: np.ndarray, eps: float) -> np.ndarray:
    keep = []
    for p in pts:
        if all(np.linalg.norm(p - q) > eps for q in keep):
            keep.append(p)
    return np.array(keep)


def _drop_collinear(pts, cycle, normal, eps) -> list:
    """Remove cycle vertices whose turn is numerically zero."""
    cycle = list(cycle)
    changed = True
    while changed and len(cycle) > 3:
        changed = False
        for k in range(len(cycle)):
            a, b, c = pts[cycle[k - 1]], pts[cycle[k]], pts[cycle[(k + 1) % len(cycle)]]
            if abs(np.cross(b - a, c - b) @ normal) <= eps * np.linalg.norm(c - a):
                del cycle[k]
                changed = True
                break
    return cycle


def truncate(P: Polyhedron, cut: Plane) -> Polyhedron:
    """Intersect ``P`` with the closed halfspace ``normal . p <= offset``.

    Vertices within ``tol_plane`` of the plane are snapped onto it.  A plane
    that misses ``P`` returns ``P`` unchanged.

    Raises
    ------
    TangentPlane
        The plane only touches ``P`` or removes all of it.
    """
    if P.degenerate:
        raise DegenerateInput("cannot truncate a degenerate polyhedron")
    n = np.asarray(cut.normal)
    s = cut.signed_distance(P.vertices)
    eps = P.eps_plane
    inside, outside = s < -eps, s > eps
    if not outside.any():
        if (~inside).any():
            raise TangentPlane("cut plane only touches the polyhedron")
        return P
    if not inside.any():
        raise TangentPlane("cut plane leaves nothing on the kept side")
    pts = []
    for v in range(P.n_vertices):
        if not outside[v]:
            p = P.vertices[v] - (s[v] * n if not inside[v] else 0.0)
            pts.append(p)
    for (i, j) in P.edges:
        if (inside[i] and outside[j]) or (inside[j] and outside[i]):
            lam = s[i] / (s[i] - s[j])
            pts.append(P.vertices[i] + lam * (P.vertices[j] - P.vertices[i]))
    return convex_hull(np.array(pts), tol=P.tol)


def make_regular_pyramid(n: int, apex_height: float, tol=DEFAULT_TOL) -> Polyhedron:
    """Pyramid over a regular ``n``-gon of circumradius 1 in z=0, apex on the z axis.

    Vertex 0 is the apex; base vertex ``k`` sits at angle ``2 pi k / n``.
    """
    if n < 3 or not apex_height > 0:
        raise DegenerateInput("need n >= 3 and a positive apex height")
    ang = 2 * np.pi * np.arange(n) / n
    base = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(n)])
    verts = np.vstack([[0.0, 0.0, apex_height], base])
    faces = [[0, 1 + (k + 1) % n, 1 + k] for k in range(n)]
    faces.append(list(range(1, n + 1)))
    return build_polyhedron(verts, faces, tol=tol)


def make_bipyramid(n: int, apex_height: float = 1.0, tol=DEFAULT_TOL) -> Polyhedron:
    """Regular ``n``-gonal pyramid doubled by reflection in its base plane."""
    if n < 3 or not apex_height > 0:
        raise DegenerateInput("need n >= 3 and a positive apex height")
    ang = 2 * np.pi * np.arange(n) / n
    base = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(n)])
    verts = np.vstack([[0.0, 0.0, apex_height], [0.0, 0.0, -apex_height], base])
    faces = [[0, 2 + k, 2 + (k + 1) % n] for k in range(n)]
    faces += [[1, 2 + (k + 1) % n, 2 + k] for k in range(n)]
    return build_polyhedron(verts, faces, tol=tol)
