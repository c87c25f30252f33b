"""Independent upper-bound oracle: Dijkstra on a subdivided surface graph."""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ..surface import SurfacePoint, canonical, faces_of, position


class _BaseGraph:
    def __init__(self, P, subdivisions):
        pts = [p for p in P.vertices]
        edge_nodes = []
        for (i, j) in P.edges:
            ids = [i]
            for k in range(1, subdivisions):
                t = k / subdivisions
                pts.append((1 - t) * P.vertices[i] + t * P.vertices[j])
                ids.append(len(pts) - 1)
            ids.append(j)
            edge_nodes.append(ids)
        self.points = np.array(pts)
        self.face_nodes = []
        rows, cols, vals = [], [], []
        for f in range(P.n_faces):
            ids = sorted({n for e in P.face_edges[f] for n in edge_nodes[e]})
            ids = np.array(ids)
            self.face_nodes.append(ids)
            q = self.points[ids]
            d = np.linalg.norm(q[:, None] - q[None], axis=2)
            r, c = np.nonzero(d > 0)
            rows.append(ids[r])
            cols.append(ids[c])
            vals.append(d[r, c])
        self.rows = np.concatenate(rows)
        self.cols = np.concatenate(cols)
        self.vals = np.concatenate(vals)


def _base(P, subdivisions):
    cache = P.__dict__.setdefault("_graph_cache", {})
    if subdivisions not in cache:
        cache[subdivisions] = _BaseGraph(P, subdivisions)
    return cache[subdivisions]


class GraphDistances:
    """Distances from a source over the subdivided graph.

    ``distances[k]`` is an upper bound on the geodesic distance to
    ``points[k]``; :meth:`distance_to` extends the bound to any surface point
    by a final straight hop inside a face.
    """

    def __init__(self, P, base, distances, source=None):
        self.P = P
        self.source = source
        self.points = base.points
        self.face_nodes = base.face_nodes
        self.distances = distances

    def distance_to(self, y: SurfacePoint) -> float:
        y = canonical(self.P, y)
        p = position(self.P, y)
        best = np.inf
        if self.source is not None and set(faces_of(self.P, y)) & set(faces_of(self.P, self.source)):
            # same face: the straight segment is itself a surface path
            best = float(np.linalg.norm(position(self.P, self.source) - p))
        for f in faces_of(self.P, y):
            ids = self.face_nodes[f]
            d = self.distances[ids] + np.linalg.norm(self.points[ids] - p, axis=1)
            best = min(best, float(d.min()))
        return best


def approx_distance_graph(P, x: SurfacePoint, subdivisions: int = 64) -> GraphDistances:
    """Dijkstra over vertices, edge subdivision points and in-face chords."""
    if subdivisions < 1:
        raise ValueError("subdivisions must be >= 1")
    x = canonical(P, x)
    base = _base(P, subdivisions)
    n = len(base.points)
    p = position(P, x)
    ids = np.unique(np.concatenate([base.face_nodes[f] for f in faces_of(P, x)]))
    d = np.linalg.norm(base.points[ids] - p, axis=1)
    rows = np.concatenate([base.rows, np.full(len(ids), n), ids])
    cols = np.concatenate([base.cols, ids, np.full(len(ids), n)])
    # zero-length links would vanish from a sparse matrix
    vals = np.concatenate([base.vals, np.maximum(d, 1e-300), np.maximum(d, 1e-300)])
    graph = coo_matrix((vals, (rows, cols)), shape=(n + 1, n + 1)).tocsr()
    dist = dijkstra(graph, directed=False, indices=n)
    return GraphDistances(P, base, dist[:n], x)
