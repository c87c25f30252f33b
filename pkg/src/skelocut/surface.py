"""Canonical points on the surface of a polyhedron."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError

VERTEX, EDGE, FACE = "vertex", "edge", "face"


@dataclass(frozen=True)
class SurfacePoint:
    """A point anchored on a vertex, an edge or a face.

    ``params`` is empty for a vertex, ``(t,)`` for an edge ``(i, j)`` with
    ``i < j`` (``t = 0`` at ``i``), and the face weights for a face, one per
    face vertex.  Face weights are canonical: only the three weights of the
    fan triangle ``(f[0], f[k], f[k+1])`` containing the point are non-zero.
    """

    kind: str
    index: int
    params: tuple = ()

    def __str__(self):
        if self.kind == VERTEX:
            return f"vertex:{self.index}"
        if self.kind == EDGE:
            return f"edge:{self.index}:{self.params[0]!r}"
        return f"face:{self.index}:" + ",".join(repr(w) for w in self.params)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "index": self.index, "params": list(self.params)}


def from_dict(data: dict) -> SurfacePoint:
    return SurfacePoint(data["kind"], int(data["index"]), tuple(float(w) for w in data["params"]))


def vertex_point(i: int) -> SurfacePoint:
    return SurfacePoint(VERTEX, int(i))


def edge_point(P, e: int, t: float) -> SurfacePoint:
    return canonical(P, SurfacePoint(EDGE, int(e), (float(t),)))


def face_centroid(P, f: int) -> SurfacePoint:
    """Centroid of the face polygon (area centroid)."""
    face = P.faces[f]
    pts = P.vertices[list(face)]
    c0 = pts[0]
    total, acc = 0.0, np.zeros(3)
    for k in range(1, len(face) - 1):
        a = np.linalg.norm(np.cross(pts[k] - c0, pts[k + 1] - c0))
        total += a
        acc += a * (c0 + pts[k] + pts[k + 1]) / 3
    return locate(P, acc / total, f)


def face_point(P, f: int, weights) -> SurfacePoint:
    w = np.asarray(weights, dtype=float)
    if len(w) != len(P.faces[f]) or np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-9:
        raise InputError("face weights must be non-negative, one per vertex, summing to 1")
    return locate(P, w @ P.vertices[list(P.faces[f])], f)


def position(P, sp: SurfacePoint) -> np.ndarray:
    if sp.kind == VERTEX:
        return P.vertices[sp.index].copy()
    if sp.kind == EDGE:
        i, j = P.edges[sp.index]
        t = sp.params[0]
        return (1 - t) * P.vertices[i] + t * P.vertices[j]
    return np.asarray(sp.params) @ P.vertices[list(P.faces[sp.index])]


def faces_of(P, sp: SurfacePoint) -> list:
    if sp.kind == VERTEX:
        return list(P.vertex_fans[sp.index])
    if sp.kind == EDGE:
        return list(P.edge_faces[sp.index])
    return [sp.index]


def canonical(P, sp: SurfacePoint) -> SurfacePoint:
    """Snap to the lowest-dimensional anchor within ``tol_len``."""
    if sp.kind == VERTEX:
        return sp
    if sp.kind == EDGE:
        i, j = P.edges[sp.index]
        t = float(sp.params[0])
        length = P.edge_length(sp.index)
        if t * length <= P.eps_len:
            return vertex_point(i)
        if (1 - t) * length <= P.eps_len:
            return vertex_point(j)
        return SurfacePoint(EDGE, sp.index, (t,))
    return locate(P, position(P, sp), sp.index)


def locate(P, point, f: int) -> SurfacePoint:
    """Canonical surface point for a 3D ``point`` lying in face ``f``."""
    p = np.asarray(point, dtype=float)
    face = P.faces[f]
    eps = P.eps_len
    for v in face:
        if np.linalg.norm(P.vertices[v] - p) <= eps:
            return vertex_point(v)
    for k in range(len(face)):
        i, j = face[k], face[(k + 1) % len(face)]
        a, b = P.vertices[i], P.vertices[j]
        d = b - a
        t = float((p - a) @ d / (d @ d))
        if 0 <= t <= 1 and np.linalg.norm(a + t * d - p) <= eps:
            e = P.edge_id(i, j)
            if i > j:
                t = 1 - t
            return SurfacePoint(EDGE, e, (t,))
    pts = P.vertices[list(face)]
    n = P.face_normals[f]
    best = None
    for k in range(1, len(face) - 1):
        w = _barycentric(pts[0], pts[k], pts[k + 1], p, n)
        if best is None or w.min() > best[1].min():
            best = (k, w)
    k, w = best
    weights = [0.0] * len(face)
    weights[0], weights[k], weights[k + 1] = (float(x) for x in w)
    return SurfacePoint(FACE, f, tuple(weights))


def _barycentric(a, b, c, p, n):
    area = np.cross(b - a, c - a) @ n
    wa = np.cross(c - b, p - b) @ n / area
    wb = np.cross(a - c, p - c) @ n / area
    return np.array([wa, wb, 1 - wa - wb])


def contains(P, f: int, point, eps=None) -> bool:
    """Whether a 3D point lies in face ``f`` (closed), within ``eps``."""
    eps = P.eps_len * 10 if eps is None else eps
    p = np.asarray(point, dtype=float)
    n = P.face_normals[f]
    if abs(p @ n - P.face_offsets[f]) > eps:
        return False
    face = P.faces[f]
    for k in range(len(face)):
        a, b = P.vertices[face[k]], P.vertices[face[(k + 1) % len(face)]]
        if np.cross(b - a, p - a) @ n < -eps * np.linalg.norm(b - a):
            return False
    return True


def parse_source(P, text: str) -> SurfacePoint:
    """Parse ``vertex:i``, ``edge:i:t``, ``face:i:centroid`` or ``face:i:b1,b2,...``.

    Face weights come one per face vertex; three weights on a larger face
    refer to its first fan triangle ``(f[0], f[1], f[2])``.
    """
    parts = text.strip().split(":")
    try:
        kind, idx = parts[0], int(parts[1])
        if kind == VERTEX and len(parts) == 2:
            if not 0 <= idx < P.n_vertices:
                raise InputError(f"vertex {idx} out of range")
            return vertex_point(idx)
        if kind == EDGE and len(parts) == 3:
            t = float(parts[2])
            if not (0 <= idx < P.n_edges and 0 <= t <= 1):
                raise InputError("edge index or parameter out of range")
            return edge_point(P, idx, t)
        if kind == FACE and len(parts) == 3:
            if not 0 <= idx < P.n_faces:
                raise InputError(f"face {idx} out of range")
            if parts[2] == "centroid":
                return face_centroid(P, idx)
            ws = [float(w) for w in parts[2].split(",")]
            if len(ws) == 3:
                ws += [0.0] * (len(P.faces[idx]) - 3)
            return face_point(P, idx, ws)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad source spec {text!r}", 0) from exc
    raise ParseError(f"bad source spec {text!r}", 0)
