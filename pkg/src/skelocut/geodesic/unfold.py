"""Source unfolding: the surface cut along the cut locus, developed flat."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.ops import unary_union

from .. import planar
from ..surface import SurfacePoint
from .cutlocus import face_images
from .engine import GeodesicField, apply_inverse


@dataclass
class PlacedPolygon:
    face: int
    coords: list  # 2D vertices in the unfolding plane, counterclockwise
    points3d: list  # matching surface points


@dataclass
class Net:
    """Planar polygons with rigid placements and the gluing of their cut boundary.

    ``glue`` pairs boundary fragments ``((poly, k), (poly2, k2))`` that are the
    two sides of one piece of the cut; fragment ``k`` of a polygon runs from
    vertex ``k`` to ``k + 1`` after :meth:`refine`.
    """

    polygons: list
    source: tuple
    glue: list = field(default_factory=list)
    boundary: list = field(default_factory=list)
    scale: float = 1.0

    @property
    def area(self) -> float:
        return sum(abs(planar.signed_area(p.coords)) for p in self.polygons)

    def to_dict(self) -> dict:
        return {
            "polygons": [{"face": p.face, "coords": [list(c) for c in p.coords]} for p in self.polygons],
            "source": list(self.source),
            "glue": [[list(a), list(b)] for a, b in self.glue],
        }


def _halfplane(sx, sy, kx, ky, R):
    """Polygon approximating ``{y : |y - k| < |y - s|}`` inside a box of size R."""
    mx, my = (sx + kx) / 2, (sy + ky) / 2
    dx, dy = kx - sx, ky - sy
    L = math.hypot(dx, dy)
    nx, ny = dx / L, dy / L
    tx, ty = -ny, nx
    return Polygon([(mx + R * tx, my + R * ty), (mx + R * tx + R * nx, my + R * ty + R * ny),
                    (mx - R * tx + R * nx, my - R * ty + R * ny), (mx - R * tx, my - R * ty)])


def _lit_polygon(im, face_poly, R):
    if im.full:
        return face_poly
    parts = []
    for px, py, qx, qy in im.cones:
        d1 = np.array([px - im.sx, py - im.sy])
        d2 = np.array([qx - im.sx, qy - im.sy])
        d1 *= R / np.linalg.norm(d1)
        d2 *= R / np.linalg.norm(d2)
        parts.append(Polygon([(im.sx, im.sy), (im.sx + d1[0], im.sy + d1[1]), (im.sx + d2[0], im.sy + d2[1])]))
    return unary_union(parts).intersection(face_poly)


def face_cells(F: GeodesicField, f: int):
    """Regions of face ``f`` where each image is the closest lit one."""
    ch = F.ch
    P = F.P
    images = face_images(F, f)
    corners = [ch.coords[f][v] for v in P.faces[f]]
    # GEOS overlays can drop whole regions next to near-degenerate slivers;
    # a fixed grid far below eps makes them robust
    grid = 1e-12 * P.scale
    face_poly = shapely.set_precision(Polygon(corners), grid)
    R = 10 * (P.scale + (F.bound if math.isfinite(F.bound) else P.scale))
    lit = [shapely.set_precision(_lit_polygon(im, face_poly, R), grid) for im in images]
    min_area = 1e-12 * P.scale ** 2
    out = []
    for i, im in enumerate(images):
        cell = lit[i]
        if cell.area <= min_area:
            continue
        for k, other in enumerate(images):
            if k == i or lit[k].area <= min_area:
                continue
            if math.hypot(other.sx - im.sx, other.sy - im.sy) <= 10 * F.eps:
                continue
            half = shapely.set_precision(_halfplane(im.sx, im.sy, other.sx, other.sy, R), grid)
            cell = cell.difference(lit[k].intersection(half))
            if cell.area <= min_area:
                break
        geoms = getattr(cell, "geoms", [cell])
        for g in geoms:
            if g.geom_type == "Polygon" and g.area > min_area:
                out.append((im, g))
    return out


def _clean_ring(coords, eps):
    pts = [tuple(c) for c in coords[:-1]]
    changed = True
    while changed and len(pts) > 3:
        changed = False
        for k in range(len(pts)):
            a, b, c = pts[k - 1], pts[k], pts[(k + 1) % len(pts)]
            if math.hypot(b[0] - a[0], b[1] - a[1]) <= eps or \
                    abs(planar.orient(a, b, c)) <= eps * math.hypot(c[0] - a[0], c[1] - a[1]):
                del pts[k]
                changed = True
                break
    if planar.signed_area(pts) < 0:
        pts.reverse()
    return pts


def source_unfolding(P, x: SurfacePoint, field_: GeodesicField = None) -> Net:
    """Develop ``P`` cut along the cut locus of ``x`` into the plane."""
    F = field_ if field_ is not None else GeodesicField(P, x)
    ch = F.ch
    polys = []
    for f in range(P.n_faces):
        for im, cell in face_cells(F, f):
            ring = _clean_ring(list(cell.exterior.coords), 10 * F.eps)
            coords = [apply_inverse(im.T, px, py) for px, py in ring]
            pts3 = [ch.to3d(f, px, py) for px, py in ring]
            polys.append(PlacedPolygon(f, coords, pts3))
    net = Net(polys, F.source_image(), scale=P.scale)
    refine(net, 100 * F.eps)
    return net


def refine(net: Net, tol: float) -> None:
    """Split polygon edges at vertices of other polygons and compute the gluing."""
    verts = [(c, p3) for poly in net.polygons for c, p3 in zip(poly.coords, poly.points3d)]
    for poly in net.polygons:
        coords, pts = [], []
        n = len(poly.coords)
        for k in range(n):
            a, b = poly.coords[k], poly.coords[(k + 1) % n]
            A, B = poly.points3d[k], poly.points3d[(k + 1) % n]
            L = math.hypot(b[0] - a[0], b[1] - a[1])
            cuts = []
            for c, p3 in verts:
                t2 = ((c[0] - a[0]) * (b[0] - a[0]) + (c[1] - a[1]) * (b[1] - a[1])) / (L * L)
                if tol / L < t2 < 1 - tol / L and planar.point_segment_distance(c, a, b) <= tol:
                    cuts.append(t2)
                    continue
                d = B - A
                t3 = float((p3 - A) @ d / (d @ d))
                if tol / L < t3 < 1 - tol / L and np.linalg.norm(A + t3 * d - p3) <= tol:
                    cuts.append(t3)
            coords.append(a)
            pts.append(A)
            for t in sorted(set(round(t, 12) for t in cuts)):
                coords.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
                pts.append(A + t * (B - A))
        poly.coords, poly.points3d = coords, pts
    # fragments shared in the plane are interior; the rest is the cut boundary
    frags = []
    for i, poly in enumerate(net.polygons):
        n = len(poly.coords)
        for k in range(n):
            a, b = poly.coords[k], poly.coords[(k + 1) % n]
            frags.append((i, k, [*a, *b], [*poly.points3d[k], *poly.points3d[(k + 1) % n]]))
    owner = np.array([f[0] for f in frags])
    E2 = np.array([f[2] for f in frags])
    E3 = np.array([f[3] for f in frags])
    other = owner[:, None] != owner[None, :]
    inner = other & _matches(E2, 2, tol)
    interior = inner.any(axis=1)
    net.boundary = [(frags[k][0], frags[k][1]) for k in np.flatnonzero(~interior)]
    bidx = np.flatnonzero(~interior)
    same3 = _matches(E3[bidx], 3, tol) & other[np.ix_(bidx, bidx)]
    glue, used = [], set()
    for u in range(len(bidx)):
        if u in used:
            continue
        for v in np.flatnonzero(same3[u]):
            if v > u and v not in used:
                used.update((u, v))
                glue.append(((frags[bidx[u]][0], frags[bidx[u]][1]), (frags[bidx[v]][0], frags[bidx[v]][1])))
                break
    net.glue = glue


def _matches(E, dim, tol):
    """Pairwise test that segments coincide, in either orientation."""
    a, b = E[:, :dim], E[:, dim:]
    same = (np.linalg.norm(a[:, None] - a[None], axis=2) <= tol) & (np.linalg.norm(b[:, None] - b[None], axis=2) <= tol)
    flip = (np.linalg.norm(a[:, None] - b[None], axis=2) <= tol) & (np.linalg.norm(b[:, None] - a[None], axis=2) <= tol)
    return same | flip
