"""Exact shortest paths by best-first propagation of unfolded windows.

Every face gets a 2D frame.  A window is the image of the source in the
unfolded frame of one face, together with the wedge of directions that
reaches this face through the sequence of crossed edges.  Windows are
expanded in order of their distance lower bound.  A shortest path on a
convex surface never passes through a vertex and meets every face in a
single segment, so a window never re-enters a face already on its strip.
Expansion stops once the lower bound exceeds an upper bound on the largest
distance from the source, derived from the distances to the vertices.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SearchBudgetExceeded
from ..surface import EDGE, FACE, VERTEX, SurfacePoint, canonical, faces_of, locate, position

FRONTIER_CAP = 1_000_000
REL_TIE = 1e-7


# -- planar rigid motions (c, s, tx, ty): p -> R p + t ------------------------

def apply(T, x, y):
    c, s, tx, ty = T
    return c * x - s * y + tx, s * x + c * y + ty


def apply_inverse(T, x, y):
    c, s, tx, ty = T
    x, y = x - tx, y - ty
    return c * x + s * y, -s * x + c * y


def compose(A, B):
    """The motion ``A o B``."""
    ac, as_, atx, aty = A
    bc, bs, btx, bty = B
    tx, ty = apply(A, btx, bty)
    return (ac * bc - as_ * bs, as_ * bc + ac * bs, tx, ty)


def invert(T):
    c, s, tx, ty = T
    return (c, -s, -(c * tx + s * ty), s * tx - c * ty)


IDENTITY = (1.0, 0.0, 0.0, 0.0)


def cross(ax, ay, bx, by):
    return ax * by - ay * bx


class Charts:
    """Per-face planar frames and the unfolding motions across every edge."""

    def __init__(self, P):
        self.P = P
        self.origin, self.ex, self.ey, self.coords = [], [], [], []
        for f, face in enumerate(P.faces):
            pts = P.vertices[list(face)]
            n = P.face_normals[f]
            ex = pts[1] - pts[0]
            ex = ex / np.linalg.norm(ex)
            ey = np.cross(n, ex)
            self.origin.append(pts[0])
            self.ex.append(ex)
            self.ey.append(ey)
            self.coords.append({v: (float((p - pts[0]) @ ex), float((p - pts[0]) @ ey)) for v, p in zip(face, pts)})
        self.cross_edge = {}
        for (a, b), g in P.halfedges.items():
            h = P.halfedges[(b, a)]
            ag, bg = self.coords[g][a], self.coords[g][b]
            ah, bh = self.coords[h][a], self.coords[h][b]
            phi = math.atan2(bh[1] - ah[1], bh[0] - ah[0]) - math.atan2(bg[1] - ag[1], bg[0] - ag[0])
            c, s = math.cos(phi), math.sin(phi)
            tx, ty = ah[0] - (c * ag[0] - s * ag[1]), ah[1] - (s * ag[0] + c * ag[1])
            self.cross_edge[(a, b)] = (h, (c, s, tx, ty))
        self.radius = []
        for f, face in enumerate(P.faces):
            self.radius.append({
                v: max(float(np.linalg.norm(P.vertices[v] - P.vertices[w])) for w in face) for v in face
            })

    def to2d(self, f, p):
        d = np.asarray(p, dtype=float) - self.origin[f]
        return float(d @ self.ex[f]), float(d @ self.ey[f])

    def to3d(self, f, x, y):
        return self.origin[f] + x * self.ex[f] + y * self.ey[f]


def charts(P) -> Charts:
    ch = P.__dict__.get("_charts")
    if ch is None:
        ch = Charts(P)
        P.__dict__["_charts"] = ch
    return ch


class Window:
    """Unfolded source image in one face, lit through an edge interval.

    ``cone`` is None for a root window (source inside the face); otherwise
    ``(px, py, qx, qy)`` are the ends of the lit interval on the entry edge,
    ordered counterclockwise as seen from the image ``(sx, sy)``.  ``T`` maps
    unfolding-plane coordinates to face coordinates.
    """

    __slots__ = ("face", "sx", "sy", "cone", "T", "parent", "entry", "mask", "lb", "exclude")

    def __init__(self, face, sx, sy, cone, T, parent, entry, mask, lb, exclude=()):
        self.face, self.sx, self.sy, self.cone = face, sx, sy, cone
        self.T, self.parent, self.entry, self.mask, self.lb = T, parent, entry, mask, lb
        self.exclude = exclude

    def lights(self, x, y, eps):
        if self.cone is None:
            return True
        px, py, qx, qy = self.cone
        sx, sy = self.sx, self.sy
        dx, dy = x - sx, y - sy
        d1x, d1y, d2x, d2y = px - sx, py - sy, qx - sx, qy - sy
        return (cross(d1x, d1y, dx, dy) >= -eps * math.hypot(d1x, d1y)
                and cross(dx, dy, d2x, d2y) >= -eps * math.hypot(d2x, d2y))

    def strip(self):
        """Windows from the root to this one."""
        out, w = [], self
        while w is not None:
            out.append(w)
            w = w.parent
        return out[::-1]


def _segment_distance(sx, sy, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((sx - ax) * dx + (sy - ay) * dy) / L2))
    return math.hypot(sx - ax - t * dx, sy - ay - t * dy)


def _halfline(u, v, eps):
    """Interval of ``lam`` in [0, 1] with ``u + lam * v >= -eps``."""
    if abs(v) < 1e-300:
        return (0.0, 1.0) if u >= -eps else None
    r = (-eps - u) / v
    return (max(0.0, r), 1.0) if v > 0 else (0.0, min(1.0, r))


@dataclass
class UnfoldedGeodesic:
    """A shortest path together with its development into the plane.

    ``faces`` and ``edges`` list the strip; ``points`` is the 3D polyline
    from source to target; ``planar`` holds the straight segment in the
    unfolding plane of the source, and ``strip`` the placed face polygons.
    """

    source: SurfacePoint
    target: SurfacePoint
    faces: list
    edges: list
    points: np.ndarray
    planar: tuple
    strip: list = field(repr=False)
    length: float = 0.0

    @property
    def direction(self) -> np.ndarray:
        for p in self.points[1:]:
            d = p - self.points[0]
            n = np.linalg.norm(d)
            if n > 0:
                return d / n
        return np.zeros(3)


class GeodesicField:
    """All windows of a source point; answers distance and geodesic queries.

    Parameters
    ----------
    P : Polyhedron
    x : SurfacePoint
    cap : int
        Maximum number of windows before ``SearchBudgetExceeded``.
    """

    def __init__(self, P, x: SurfacePoint, cap: int = FRONTIER_CAP):
        self.P = P
        self.x = canonical(P, x)
        self.ch = charts(P)
        self.x3 = position(P, self.x)
        self.eps = P.eps_len
        self.cap = cap
        self.windows = [[] for _ in range(P.n_faces)]
        self.vertex_dist = np.full(P.n_vertices, np.inf)
        self._propagate()

    # -- construction -------------------------------------------------------
    def _roots(self):
        P, ch, x = self.P, self.ch, self.x
        if x.kind == FACE:
            f = x.index
            return [(f, IDENTITY, ())]
        if x.kind == EDGE:
            i, j = P.edges[x.index]
            f0, f1 = P.edge_faces[x.index]
            return [(f0, IDENTITY, (x.index,)), (f1, ch.cross_edge[(i, j)][1], (x.index,))]
        v = x.index
        excl = tuple(P.edge_id(v, w) for w in P.skeleton[v])
        roots, T = [], IDENTITY
        for f in P.vertex_fans[v]:
            roots.append((f, T, excl))
            face = P.faces[f]
            prev = face[face.index(v) - 1]
            T = compose(ch.cross_edge[(prev, v)][1], T)
        return roots

    def _propagate(self):
        P, ch = self.P, self.ch
        if self.x.kind == VERTEX:
            self.vertex_dist[self.x.index] = 0.0
        heap, counter = [], 0
        for f, T, excl in self._roots():
            sx, sy = ch.to2d(f, self.x3)
            w = Window(f, sx, sy, None, T, None, None, 1 << f, 0.0, excl)
            heap.append((0.0, counter, w))
            counter += 1
        heapq.heapify(heap)
        bound, created = math.inf, len(heap)
        while heap:
            lb, _, w = heapq.heappop(heap)
            if lb > bound * (1 + 1e-9) + self.eps:
                bound = self._bound()
                if lb > bound * (1 + 1e-9) + self.eps:
                    break
            self.windows[w.face].append(w)
            self._light_vertices(w)
            for child in self._children(w, bound):
                heapq.heappush(heap, (child.lb, counter, child))
                counter += 1
                created += 1
                if created > self.cap:
                    raise SearchBudgetExceeded(f"more than {self.cap} windows")
        self.bound = self._bound()

    def _light_vertices(self, w):
        coords = self.ch.coords[w.face]
        for v, (vx, vy) in coords.items():
            if w.lights(vx, vy, self.eps):
                d = math.hypot(vx - w.sx, vy - w.sy)
                if d < self.vertex_dist[v]:
                    self.vertex_dist[v] = d

    def _bound(self):
        vd = self.vertex_dist
        if not np.all(np.isfinite(vd)):
            return math.inf
        return max(min(vd[v] + r for v, r in rad.items()) for rad in self.ch.radius)

    def _children(self, w, bound):
        P, ch = self.P, self.ch
        face = P.faces[w.face]
        coords = ch.coords[w.face]
        sx, sy = w.sx, w.sy
        eps = self.eps
        out = []
        for k in range(len(face)):
            a, b = face[k], face[(k + 1) % len(face)]
            e = P.edge_id(a, b)
            if e == w.entry or e in w.exclude:
                continue
            h, H = ch.cross_edge[(a, b)]
            if (w.mask >> h) & 1:
                continue
            ax, ay = coords[a]
            bx, by = coords[b]
            if w.cone is None:
                lam0, lam1 = 0.0, 1.0
            else:
                px, py, qx, qy = w.cone
                d1x, d1y, d2x, d2y = px - sx, py - sy, qx - sx, qy - sy
                n1, n2 = math.hypot(d1x, d1y), math.hypot(d2x, d2y)
                u1 = cross(d1x, d1y, ax - sx, ay - sy) / n1
                v1 = cross(d1x, d1y, bx - ax, by - ay) / n1
                u2 = cross(ax - sx, ay - sy, d2x, d2y) / n2
                v2 = cross(bx - ax, by - ay, d2x, d2y) / n2
                r1, r2 = _halfline(u1, v1, eps), _halfline(u2, v2, eps)
                if r1 is None or r2 is None:
                    continue
                lam0, lam1 = max(r1[0], r2[0]), min(r1[1], r2[1])
            length = math.hypot(bx - ax, by - ay)
            if (lam1 - lam0) * length <= eps:
                continue
            p0 = (ax + lam0 * (bx - ax), ay + lam0 * (by - ay))
            p1 = (ax + lam1 * (bx - ax), ay + lam1 * (by - ay))
            nsx, nsy = apply(H, sx, sy)
            npx, npy = apply(H, *p0)
            nqx, nqy = apply(H, *p1)
            c = cross(npx - nsx, npy - nsy, nqx - nsx, nqy - nsy)
            if abs(c) <= 1e-14 * ((npx - nsx) ** 2 + (npy - nsy) ** 2 + (nqx - nsx) ** 2 + (nqy - nsy) ** 2):
                continue
            if c < 0:
                npx, npy, nqx, nqy = nqx, nqy, npx, npy
            lb = _segment_distance(nsx, nsy, npx, npy, nqx, nqy)
            if lb > bound * (1 + 1e-9) + eps:
                continue
            out.append(Window(h, nsx, nsy, (npx, npy, nqx, nqy), compose(H, w.T), w, e, w.mask | (1 << h), lb))
        return out

    # -- queries --------------------------------------------------------------
    @property
    def tie_tol(self):
        return lambda d: REL_TIE * d + self.eps

    def _candidates(self, y: SurfacePoint):
        y3 = position(self.P, y)
        out = []
        for f in faces_of(self.P, y):
            yx, yy = self.ch.to2d(f, y3)
            for w in self.windows[f]:
                if w.lights(yx, yy, self.eps):
                    out.append((math.hypot(yx - w.sx, yy - w.sy), w, (yx, yy)))
        return out

    def distance(self, y: SurfacePoint) -> float:
        y = canonical(self.P, y)
        if y == self.x:
            return 0.0
        cands = self._candidates(y)
        return min(c[0] for c in cands) if cands else math.inf

    def distance_to_point(self, f: int, point) -> float:
        return self.distance(locate(self.P, point, f))

    def geodesics(self, y: SurfacePoint) -> list:
        """All shortest geodesics from the source to ``y``, deduplicated."""
        P = self.P
        y = canonical(P, y)
        if y == self.x:
            return [UnfoldedGeodesic(self.x, y, [faces_of(P, y)[0]], [], np.array([self.x3, self.x3]),
                                     ((0.0, 0.0), (0.0, 0.0)), [], 0.0)]
        cands = self._candidates(y)
        if not cands:
            return []
        dmin = min(c[0] for c in cands)
        tol = REL_TIE * dmin + self.eps
        found, keys = [], []
        for d, w, yc in sorted(cands, key=lambda c: c[0]):
            if d > dmin + tol:
                break
            g = self._build(w, y, yc, d)
            key = self._key(g)
            if any(np.linalg.norm(key[0] - k[0]) <= 1e-6 and key[1] == k[1] for k in keys):
                continue
            keys.append(key)
            found.append(g)
        return found

    def _key(self, g):
        """Initial direction plus the face entered, unless the path starts along an edge."""
        d = g.direction
        f = g.faces[0]
        q = g.points[1]
        mid = (g.points[0] + q) / 2
        face = self.P.faces[f]
        for k in range(len(face)):
            a, b = self.P.vertices[face[k]], self.P.vertices[face[(k + 1) % len(face)]]
            u = b - a
            t = (mid - a) @ u / (u @ u)
            if -1e-9 <= t <= 1 + 1e-9 and np.linalg.norm(a + t * u - mid) <= 10 * self.eps:
                return d, None
        return d, f

    def _build(self, w, y, yc, d):
        P, ch = self.P, self.ch
        chain = w.strip()
        pts = [position(P, y)]
        cx, cy = yc
        edges = []
        for k in range(len(chain) - 1, 0, -1):
            cur, par = chain[k], chain[k - 1]
            a, b = P.edges[cur.entry]
            (ax, ay), (bx, by) = ch.coords[cur.face][a], ch.coords[cur.face][b]
            dx, dy = cx - cur.sx, cy - cur.sy
            ex, ey = bx - ax, by - ay
            den = cross(dx, dy, ex, ey)
            lam = 0.5 if abs(den) < 1e-300 else cross(ax - cur.sx, ay - cur.sy, dx, dy) / den
            lam = min(1.0, max(0.0, lam))
            q = ch.to3d(cur.face, ax + lam * ex, ay + lam * ey)
            pts.append(q)
            edges.append(cur.entry)
            cx, cy = ch.to2d(par.face, q)
        pts.append(self.x3)
        pts = np.array(pts[::-1])
        strip = []
        for win in chain:
            poly = [apply_inverse(win.T, *ch.coords[win.face][v]) for v in P.faces[win.face]]
            strip.append((win.face, poly))
        x_unf = apply_inverse(chain[0].T, *ch.to2d(chain[0].face, self.x3))
        y_unf = apply_inverse(w.T, *yc)
        return UnfoldedGeodesic(self.x, y, [win.face for win in chain], edges[::-1], pts,
                                (x_unf, y_unf), strip, d)

    def source_image(self):
        """Position of the source in the unfolding plane."""
        f = faces_of(self.P, self.x)[0]
        roots = [w for w in self.windows[f] if w.cone is None]
        return apply_inverse(roots[0].T, roots[0].sx, roots[0].sy)


def shortest_geodesics(P, x: SurfacePoint, y: SurfacePoint) -> list:
    """All globally shortest geodesics from ``x`` to ``y``."""
    return GeodesicField(P, x).geodesics(y)


def geodesic_distance(P, x: SurfacePoint, y: SurfacePoint) -> float:
    return GeodesicField(P, x).distance(y)
