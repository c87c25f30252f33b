"""OBJ meshes, SVG nets and JSON reports.

JSON output is deterministic: keys keep insertion order and every float is
written with 17 significant digits.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import planar
from .errors import ParseError
from .poly import DEFAULT_TOL, Polyhedron, build_polyhedron

# -- OBJ ----------------------------------------------------------------------


def export_obj(P: Polyhedron) -> bytes:
    """Vertices and faces as ``v x y z`` / ``f i j k ...`` lines, 1-indexed."""
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in P.vertices.tolist()]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in P.faces]
    return ("\n".join(lines) + "\n").encode()


def import_obj(data, tol=DEFAULT_TOL) -> Polyhedron:
    """Parse an OBJ mesh and validate it as a convex polyhedron.

    Only ``v`` and ``f`` records are read; ``vt``/``vn`` references in face
    entries (``i/j/k``) are ignored, as are comments and other records.

    Raises
    ------
    ParseError
        Malformed line (the message carries the line number).
    NonConvex, NonPlanarFace, BadTopology
        From the validation.
    """
    text = data.decode() if isinstance(data, (bytes, bytearray)) else str(data)
    verts, faces = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        tag, rest = parts[0], parts[1:]
        try:
            if tag == "v":
                if len(rest) not in (3, 4):
                    raise ValueError("a vertex needs 3 coordinates")
                xyz = [float(t) for t in rest[:3]]
                if not all(math.isfinite(c) for c in xyz):
                    raise ValueError("non-finite coordinate")
                verts.append(xyz)
            elif tag == "f":
                if len(rest) < 3:
                    raise ValueError("a face needs at least 3 vertices")
                idx = []
                for tok in rest:
                    i = int(tok.split("/")[0])
                    i = i - 1 if i > 0 else len(verts) + i
                    if not 0 <= i < len(verts):
                        raise ValueError(f"vertex index {tok} out of range")
                    idx.append(i)
                faces.append(idx)
        except ValueError as exc:
            raise ParseError(str(exc), offset=f"line {lineno}") from None
    if not faces:
        raise ParseError("no faces in OBJ input")
    return build_polyhedron(verts, faces, tol=tol)


# -- JSON ---------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def _write(obj, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + pad)
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(sep)
            out.append(json.dumps(key) + ": ")
            _write(val, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[" + pad)
        for k, val in enumerate(obj):
            if k:
                out.append(sep)
            _write(val, out, indent, level + 1)
        out.append(end + "]")
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            out.append("null")
        else:
            text = format(obj, ".17g")
            out.append(text if any(c in text for c in ".en") else text + ".0")
    else:
        out.append(json.dumps(obj))


def dumps_json(obj, schema: str = None, indent: int = 1) -> str:
    """Deterministic JSON text; adds a leading ``schema`` field when given."""
    obj = _plain(obj)
    if schema is not None:
        obj = {"schema": schema, **{k: v for k, v in obj.items() if k != "schema"}}
    out = []
    _write(obj, out, indent, 0)
    return "".join(out) + "\n"


def net_to_dict(net) -> dict:
    d = net.to_dict()
    d["boundary"] = [list(b) for b in net.boundary]
    d["area"] = net.area
    return d


# -- nets ---------------------------------------------------------------------


def net_nonoverlap(net, tol: float = None) -> bool:
    """Whether the placed polygons are pairwise interior-disjoint.

    ``tol`` defaults to ``tol_len`` times the net's scale.
    """
    if tol is None:
        tol = DEFAULT_TOL.tol_len * max(net.scale, 1.0)
    polys = [p.coords for p in net.polygons]
    return not any(planar.polygons_overlap(a, b, tol) for a, b in itertools.combinations(polys, 2))


def net_area_matches(net, P: Polyhedron, rel: float = 1e-6) -> bool:
    """Net area equals the surface area of ``P`` within ``rel``."""
    return abs(net.area - P.surface_area) <= rel * P.surface_area


# -- SVG ----------------------------------------------------------------------

LAYERS = ("base", "faces", "cut_locus", "bisectors", "labels", "source")


@dataclass
class SvgScene:
    """Layer switches, styles and viewport for :func:`export_svg_net`.

    ``viewport`` is ``(xmin, ymin, xmax, ymax)`` in model units; ``None``
    fits the drawing with a 5% margin.
    """

    layers: dict = field(default_factory=lambda: {name: True for name in LAYERS})
    styles: dict = field(default_factory=lambda: {
        "base": 'fill="none" stroke="#888888" stroke-dasharray="4 3"',
        "faces": 'fill="#f2efe6" stroke="#7a7a7a"',
        "cut_locus": 'fill="none" stroke="#c0392b"',
        "bisectors": 'fill="none" stroke="#2e86c1" stroke-dasharray="2 2"',
        "labels": 'fill="#222222" font-family="sans-serif"',
        "source": 'fill="#000000"',
    })
    viewport: tuple = None
    width: int = 800

    def show(self, name: str) -> bool:
        return self.layers.get(name, False)


def _fmt(v: float) -> str:
    return format(v, ".10g")


def export_svg_net(net, overlays: dict = None, scene: SvgScene = None) -> bytes:
    """Render a net as SVG 1.1.

    Parameters
    ----------
    net : Net
        From :func:`skelocut.geodesic.source_unfolding`.
    overlays : dict, optional
        ``"base"``: a polygon outline; ``"bisectors"``: list of 2D segments;
        ``"labels"``: list of ``((x, y), text)``.
    scene : SvgScene, optional
    """
    overlays = overlays or {}
    scene = scene or SvgScene()
    pts = [c for p in net.polygons for c in p.coords] + [tuple(net.source)]
    pts += [tuple(c) for c in overlays.get("base", [])]
    pts += [tuple(c) for seg in overlays.get("bisectors", []) for c in seg]
    if scene.viewport is not None:
        x0, y0, x1, y1 = scene.viewport
    else:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        m = 0.05 * max(x1 - x0, y1 - y0, 1e-12)
        x0, x1, y0, y1 = x0 - m, x1 + m, y0 - m, y1 + m
    w, h = max(x1 - x0, 1e-12), max(y1 - y0, 1e-12)
    k = scene.width / w
    height = max(1, int(round(h * k)))

    def xy(p):
        # SVG is y-down: flip model y
        return _fmt((p[0] - x0) * k), _fmt((y1 - p[1]) * k)

    def pt(p):
        return ",".join(xy(p))

    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{scene.width}" height="{height}" '
           f'viewBox="0 0 {scene.width} {height}">']

    def group(name, body):
        if scene.show(name) and body:
            out.append(f'<g id="{name}" {scene.styles.get(name, "")}>')
            out.extend(body)
            out.append("</g>")

    base = overlays.get("base")
    group("base", [f'<polygon points="{" ".join(pt(p) for p in base)}"/>'] if base else [])
    group("faces", [f'<polygon data-face="{p.face}" points="{" ".join(pt(c) for c in p.coords)}"/>'
                    for p in net.polygons])
    cut = []
    for i, kk in net.boundary:
        cs = net.polygons[i].coords
        a, b = cs[kk], cs[(kk + 1) % len(cs)]
        (ax, ay), (bx, by) = xy(a), xy(b)
        cut.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke-width="2"/>')
    group("cut_locus", cut)
    group("bisectors", [f'<polyline points="{pt(a)} {pt(b)}"/>' for a, b in overlays.get("bisectors", [])])
    group("labels", ['<text x="{}" y="{}" font-size="12">{}</text>'.format(*xy(p), _escape(t))
                     for p, t in overlays.get("labels", [])])
    sx, sy = xy(net.source)
    group("source", [f'<circle cx="{sx}" cy="{sy}" r="4"/>'])
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()


def _escape(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def vertex_rays(net, P: Polyhedron) -> list:
    """Segments from the source image to every net point that is a vertex of ``P``."""
    segs, seen = [], set()
    eps = P.eps_len * 100
    for poly in net.polygons:
        for c, p3 in zip(poly.coords, poly.points3d):
            d = np.linalg.norm(P.vertices - np.asarray(p3), axis=1)
            if d.min() <= eps:
                key = (round(c[0] / eps), round(c[1] / eps))
                if key not in seen:
                    seen.add(key)
                    segs.append((tuple(net.source), tuple(c)))
    return segs
