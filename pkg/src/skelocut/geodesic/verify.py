"""Independent verification that a claimed edge tree is the cut locus of x.

The claimed tree is cut open and the surface developed along the dual
spanning tree of the remaining edges, without using the geodesic field.
The checks are then purely planar, except for the last one which compares
with the computed cut locus.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .. import planar
from ..errors import SkelocutError
from ..surface import EDGE, VERTEX, SurfacePoint, canonical, faces_of, position
from .cutlocus import cut_locus
from .engine import IDENTITY, apply, charts, compose

CHECKS = ("spanning", "development", "equidistance", "bisection", "cut_locus")


@dataclass
class VerificationReport:
    checks: dict = field(default_factory=dict)

    def record(self, name, ok, detail=None):
        entry = self.checks.setdefault(name, {"passed": True, "failures": []})
        if not ok:
            entry["passed"] = False
            if detail is not None:
                entry["failures"].append(detail)

    @property
    def passed(self) -> bool:
        return all(self.checks.get(c, {"passed": False})["passed"] for c in CHECKS)

    def failures(self) -> list:
        return [(k, v["failures"]) for k, v in self.checks.items() if not v["passed"]]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}


def normalize_edges(P, claimed) -> set:
    out = set()
    for e in claimed:
        if isinstance(e, (tuple, list)):
            out.add(P.edge_id(int(e[0]), int(e[1])))
        else:
            out.add(int(e))
    return out


def develop(P, cut: set, root_face: int):
    """Place every face in the plane of ``root_face`` across uncut edges.

    Returns per-face motions (face coordinates to plane) and the set of
    edges left uncut but not used by the spanning tree.
    """
    ch = charts(P)
    motion = {root_face: IDENTITY}
    used = set()
    queue = [root_face]
    while queue:
        g = queue.pop(0)
        face = P.faces[g]
        for k in range(len(face)):
            a, b = face[k], face[(k + 1) % len(face)]
            e = P.edge_id(a, b)
            if e in cut:
                continue
            h, _ = ch.cross_edge[(a, b)]
            if h in motion:
                continue
            motion[h] = compose(motion[g], ch.cross_edge[(b, a)][1])
            used.add(e)
            queue.append(h)
    extra = set(range(P.n_edges)) - cut - used
    return motion, extra


def _angle(u, v):
    return math.atan2(abs(planar.orient((0, 0), u, v)), u[0] * v[0] + u[1] * v[1])


def verify_skeletal(P, x: SurfacePoint, claimed) -> VerificationReport:
    """Run the four skeletal checks (plus a spanning precondition)."""
    x = canonical(P, x)
    report = VerificationReport()
    claimed = normalize_edges(P, claimed)
    eps, tol_angle = P.eps_len, P.tol.tol_angle
    tree = nx.Graph()
    tree.add_edges_from(P.edges[e] for e in claimed)
    targets = set(range(P.n_vertices)) - ({x.index} if x.kind == VERTEX else set())
    spanning = bool(claimed) and set(tree.nodes) == targets and nx.is_tree(tree)
    report.record("spanning", spanning, None if spanning else "claimed edges are not a tree spanning the vertices")
    if x.kind == EDGE and x.index in claimed:
        report.record("spanning", False, "the source lies on a claimed edge")
        spanning = False
    if spanning:
        _planar_checks(P, x, claimed, tree, report, eps, tol_angle)
    else:
        for name in ("development", "equidistance", "bisection"):
            report.record(name, False, "skipped: claimed edges are not a spanning tree")
    try:
        C = cut_locus(P, x)
        covered = C.covered_edges()
        ok = C.is_skeletal and covered == claimed
        detail = None
        if not ok:
            detail = {"skeletal": C.is_skeletal, "missing": sorted(P.edges[e] for e in claimed - covered),
                      "extra": sorted(P.edges[e] for e in covered - claimed)}
        report.record("cut_locus", ok, detail)
    except SkelocutError as exc:
        report.record("cut_locus", False, f"cut locus failed: {exc}")
    return report


def _planar_checks(P, x, claimed, tree, report, eps, tol_angle):
    ch = charts(P)
    f0 = faces_of(P, x)[0]
    motion, extra = develop(P, claimed, f0)
    if len(motion) != P.n_faces:
        report.record("development", False, "cut surface is disconnected")
        report.record("equidistance", False, "skipped")
        report.record("bisection", False, "skipped")
        return
    xs = ch.to2d(f0, position(P, x))

    def img(f, v):
        return apply(motion[f], *ch.coords[f][v])

    placed = [[img(f, v) for v in P.faces[f]] for f in range(P.n_faces)]
    for a, b in itertools.combinations(range(P.n_faces), 2):
        if planar.polygons_overlap(placed[a], placed[b], eps):
            report.record("development", False, f"faces {a} and {b} overlap")
    cuts = claimed | extra
    boundary = []
    for e in cuts:
        i, j = P.edges[e]
        for f in P.edge_faces[e]:
            boundary.append((img(f, i), img(f, j)))
    for f in range(P.n_faces):
        for q in placed[f]:
            for a, b in boundary:
                if planar.segments_cross(xs, q, a, b, eps):
                    report.record("development", False, f"not star-shaped: vertex of face {f} hidden from x")
                    break
    report.record("development", True)
    for e in sorted(claimed):
        i, j = P.edges[e]
        fl, fr = P.edge_faces[e]
        p1, q1, p2, q2 = img(fl, i), img(fl, j), img(fr, i), img(fr, j)
        m1 = ((p1[0] + q1[0]) / 2, (p1[1] + q1[1]) / 2)
        m2 = ((p2[0] + q2[0]) / 2, (p2[1] + q2[1]) / 2)
        for u, v, where in ((p1, p2, i), (q1, q2, j), (m1, m2, "midpoint")):
            du, dv = math.dist(xs, u), math.dist(xs, v)
            if abs(du - dv) > eps:
                report.record("equidistance", False, f"edge {P.edges[e]} at {where}: {du!r} vs {dv!r}")
    report.record("equidistance", True)
    for y in tree.nodes:
        for w in tree.neighbors(y):
            e = P.edge_id(y, w)
            angles = []
            for f in P.edge_faces[e]:
                yi, wi = img(f, y), img(f, w)
                angles.append(_angle((xs[0] - yi[0], xs[1] - yi[1]), (wi[0] - yi[0], wi[1] - yi[1])))
            if abs(angles[0] - angles[1]) > tol_angle:
                report.record("bisection", False,
                              f"node {y}, arc to {w}: angles {angles[0]!r} and {angles[1]!r} differ")
    report.record("bisection", True)
