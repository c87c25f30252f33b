"""Base configurations for the four degree-2 cases.

Each function starts from the regular tetrahedron ``a v1 v2 v3`` (base
circumradius 1, apex above the base center ``x``; ``v3`` on the negative
y axis, ``v1`` and ``v2`` symmetric about the plane ``a x v3``) and builds
the modified solid of one case, returning a :class:`Realization` whose
trace holds every intermediate point.  Continuity arguments are solved by
bisection on brackets that are checked first.

The general driver :func:`skelocut.realize.realize_tree` does not call these;
it bends flat degree-2 points by continuation instead.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import bisect

from .errors import InputError, RootNotBracketed, SelectionFailure, SkelocutError, UnsupportedPattern
from .geodesic.engine import geodesic_distance
from .poly import Polyhedron, convex_hull
from .surface import locate, vertex_point
from .treespec import CombinatorialTree

H = math.sqrt(2.0)


def _params(params):
    from .realize import ConstructionParams

    return params or ConstructionParams()


def _tetrahedron():
    def at(deg):
        t = math.radians(deg)
        return np.array([math.cos(t), math.sin(t), 0.0])

    return np.array([0.0, 0.0, H]), at(30), at(150), at(-90)


def _angle(p, q, r) -> float:
    """Angle at ``q`` between ``p`` and ``r``."""
    u, v = p - q, r - q
    return math.atan2(np.linalg.norm(np.cross(u, v)), u @ v)


def _hinge(p, a, b, ref):
    """Rotate ``p`` about line ``ab`` into the plane of ``a, b, ref``, on the far side from ``ref``."""
    e = (b - a) / np.linalg.norm(b - a)
    w = ref - a
    w = w - (w @ e) * e
    w = w / np.linalg.norm(w)
    q = p - a
    along = q @ e
    return a + along * e - np.linalg.norm(q - along * e) * w


def _polar(q) -> float:
    return math.atan2(q[1], q[0])


def _mirror(p):
    return np.array([-p[0], p[1], p[2]])


def _solve(f, lo, hi, params, what):
    flo, fhi = f(lo), f(hi)
    if not (flo < 0 < fhi):
        raise RootNotBracketed(f"{what}: no sign change on [{lo!r}, {hi!r}] ({flo!r}, {fhi!r})")
    return bisect(f, lo, hi, xtol=params.root_tol, maxiter=params.max_iter, disp=False)


def _assemble(points: dict, tree_edges, params, trace, kind) -> "Realization":
    """Hull of the named points, source at the origin, tree on the named nodes."""
    from .realize import Realization, RealizationTrace

    names = list(points)
    try:
        P = convex_hull(np.array([points[k] for k in names]), tol=params.tol)
    except SkelocutError as exc:
        raise UnsupportedPattern(f"{kind}: hull failed: {exc}") from None
    if P.n_vertices != len(names):
        raise UnsupportedPattern(f"{kind}: {len(names) - P.n_vertices} construction point(s) not extreme")
    index = {k: P.find_vertex(points[k]) for k in names}
    base = next(f for f in range(P.n_faces) if P.face_normals[f][2] < -0.999)
    x = locate(P, np.zeros(3), base)
    nodes = {k: n for n, k in enumerate(names)}
    T = CombinatorialTree.from_edges(len(names), [(nodes[i], nodes[j]) for i, j in tree_edges])
    claimed = {P.edge_id(index[i], index[j]) for i, j in tree_edges}
    rt = RealizationTrace()
    trace["points"] = {k: points[k] for k in names}
    rt.add(kind, **trace)
    return Realization(P, x, {nodes[k]: index[k] for k in names}, claimed, rt, T)


def case_a(params=None, *, u_fraction: float = 0.5, v1prime_fraction: float = 0.8, k: int = 1):
    """Degree-2 node ``u`` on ``a v1`` whose child ``z`` has ``k + 1`` children.

    ``u = a + u_fraction (v1 - a)`` stays on the original edge, so the faces
    ``a u t1 v3`` and ``a v2 t_{k+1} u`` keep the planes of the tetrahedron.
    ``z`` sits on ``u v1'`` with ``v1' = x + v1prime_fraction (v1 - x)``,
    at ``params.z_fraction`` from ``v1'``.  The outer chain points
    ``t1 = v1 + s (v3 - v1)`` (and its mirror) are found by bisection on
    ``s``: the bisector of the first sector of the unfolded images of ``z``
    must meet ``v1 v3`` at ``t1`` itself.  Inner chain points follow from
    the mediator planes as in :func:`skelocut.realize.truncation_chain`.
    """
    params = _params(params)
    if k < 1:
        raise InputError("case (a) needs k >= 1")
    if not (0 < u_fraction < 1 and 0 < v1prime_fraction < 1):
        raise InputError("u_fraction and v1prime_fraction must lie in (0, 1)")
    a, v1, v2, v3 = _tetrahedron()
    x = np.zeros(3)
    u = a + u_fraction * (v1 - a)
    v1p = v1prime_fraction * v1
    z = v1p + params.z_fraction * (u - v1p)

    def images(s):
        t1, tk = v1 + s * (v3 - v1), v1 + s * (v2 - v1)
        z0 = _hinge(_hinge(z, u, t1, v3), t1, v3, x)
        zk = _hinge(_hinge(z, u, tk, v2), tk, v2, x)
        A = (_polar(zk) - _polar(z0)) % (2 * math.pi)
        return t1, tk, z0, zk, A

    def direction(phi):
        return np.array([math.cos(phi), math.sin(phi), 0.0])

    def mismatch(s):
        t1, _, z0, _, A = images(s)
        d = direction(_polar(z0) + A / (2 * (k + 1)))
        M = np.column_stack([d[:2], (v1 - v3)[:2]])
        _, lam = np.linalg.solve(M, v1[:2])
        return s - lam

    s = _solve(mismatch, 1e-6, 1 - 1e-6, params, "case (a) outer chain point")
    t1, tk, z0, zk, A = images(s)
    alpha = A / (k + 1)
    r = float(np.linalg.norm(z0))
    phi0 = _polar(z0)
    zs = [r * direction(phi0 + j * alpha) for j in range(k + 2)]
    bis = [direction(phi0 + (j - 0.5) * alpha) for j in range(1, k + 2)]
    chain = [t1]
    for j in range(2, k + 1):
        d = bis[j - 1]
        sj = (z @ z - zs[j] @ zs[j]) / (2 * d @ (z - zs[j]))
        chain.append(sj * d)
    chain.append(tk)
    points = {"a": a, "u": u, "z": z, "v2": v2, "v3": v3}
    points.update({f"t{j}": t for j, t in enumerate(chain, start=1)})
    edges = [("a", "v2"), ("a", "v3"), ("a", "u"), ("u", "z")] + [("z", f"t{j}") for j in range(1, k + 2)]
    trace = {"u": u, "v1prime": v1p, "z": z, "s": s, "z_images": zs, "r_z": r, "A": A, "alpha": alpha,
             "bisectors": bis, "chain": chain,
             "mediators": [{"i": j, "midpoint": (z + zs[j]) / 2, "normal": z - zs[j]} for j in range(1, k + 1)]}
    return _assemble(points, edges, params, trace, "case_a")


def case_b(params=None, *, u_fraction: float = 0.5):
    """Degree-2 node ``u`` whose child is the leaf ``v1''``.

    First ``y`` on ``a v1'`` (``v1'`` just beyond ``v1``) is found with
    ``delta(t) = alpha``, where ``delta`` is the surface angle at ``v3`` right
    of the path ``x v3 a`` on ``conv{v2, v3, a, y, y1}``.  Then
    ``u = y + u_fraction (a - y)`` and ``v1''`` on ``y1 v1'`` is found by a
    second bisection so that the slanted edge ``u v1''`` restores the same
    angle sum.

    Raises
    ------
    RootNotBracketed
        Either bracket fails; usually a bad ``v1prime_overshoot``.
    """
    params = _params(params)
    if not 0 <= u_fraction < 1:
        raise InputError("u_fraction must lie in [0, 1)")
    a, v1, v2, v3 = _tetrahedron()
    x = np.zeros(3)
    alpha = _angle(x, v3, v2) + _angle(v2, v3, a)
    beta = _angle(x, v3, v1) + _angle(v1, v3, a)
    v1p = params.v1prime_overshoot * v1

    def y_of(t):
        y = a + t * (v1p - a)
        return y, np.array([y[0], y[1], 0.0])

    def delta(t):
        y, y1 = y_of(t)
        return _angle(x, v3, y1) + _angle(y1, v3, y) + _angle(y, v3, a)

    t = _solve(lambda t: delta(t) - alpha, 0.0, 1.0, params, "case (b) delta(t) = alpha")
    y, y1 = y_of(t)
    u = y + u_fraction * (a - y)

    def slanted(w):
        return _angle(x, v3, w) + _angle(w, v3, u) + _angle(u, v3, a)

    lam = _solve(lambda lam: slanted(y1 + lam * (v1p - y1)) - alpha, 0.0, 1.0, params,
                 "case (b) slanted edge")
    v1pp = y1 + lam * (v1p - y1)
    trace = {"alpha": alpha, "beta": beta, "beta_prime": delta(t), "delta": [delta(0.0), delta(t), delta(1.0)],
             "t": t, "y": y, "y1": y1, "u": u, "v1prime": v1p, "v1pp": v1pp, "lambda": lam,
             "beta_final": slanted(v1pp)}
    points = {"a": a, "u": u, "v1pp": v1pp, "v2": v2, "v3": v3}
    edges = [("a", "v2"), ("a", "v3"), ("a", "u"), ("u", "v1pp")]
    return _assemble(points, edges, params, trace, "case_b")


def _circle_solutions(center, R, phi_of, target, samples=3600):
    """All angles ``psi`` on the circle where ``phi_of(psi) = target`` (sign changes, then bisection)."""
    grid = np.linspace(0.0, 2 * math.pi, samples + 1)
    vals = [phi_of(p) - target for p in grid]
    out = []
    for p0, p1, f0, f1 in zip(grid, grid[1:], vals, vals[1:]):
        if f0 == 0:
            out.append(p0)
        elif f0 * f1 < 0:
            out.append(bisect(lambda p: phi_of(p) - target, p0, p1, xtol=1e-14))
    return out


def case_c(params=None, *, u_fraction: float = 0.3):
    """Chain ``u1 u2`` of two degree-2 nodes anchored at base vertices.

    ``u1, u2`` lie at ``u_fraction`` along ``a v1`` and ``a v2``; ``v3`` moves
    to ``v3' = x + v3prime_fraction (v3 - x)``.  On first failure to select
    ``a13`` the fraction is raised to 0.99 and the construction repeated.

    Raises
    ------
    SelectionFailure
        The circle ``O`` does not yield four solutions or none lies between
        ``a0`` and ``a'``.
    """
    params = _params(params)
    fractions = [params.v3prime_fraction]
    if params.v3prime_fraction < 0.99:
        fractions.append(0.99)
    last = None
    for f in fractions:
        try:
            return _case_c(params, u_fraction, f)
        except SelectionFailure as exc:
            last = exc
    raise last


def _case_c(params, u_fraction, f):
    if not 0 < u_fraction < 1:
        raise InputError("u_fraction must lie in (0, 1)")
    a, v1, v2, v3 = _tetrahedron()
    x = np.zeros(3)
    v3p = f * v3
    u1, u2 = a + u_fraction * (v1 - a), a + u_fraction * (v2 - a)
    th13, th12 = _angle(u1, a, v3p), _angle(u1, a, u2)
    target = th13 - th12 / 2
    R = float(np.linalg.norm(a - v3p))

    def on_O(psi):
        return v3p + R * np.array([math.cos(psi), math.sin(psi), 0.0])

    sols = _circle_solutions(v3p, R, lambda p: _angle(x, on_O(p), v3p), target)
    if len(sols) != 4:
        raise SelectionFailure(f"case (c): {len(sols)} solutions on the circle O instead of 4 (v3'={f})")
    # the v1 side of the line x v3' is the one a' falls on
    a_prime = _hinge(a, v3p, v1, v2)
    side = np.sign(np.cross(v3p - x, a_prime - x)[2])
    perp = np.cross([0.0, 0.0, 1.0], v3p - x)
    perp *= side * np.sign(np.cross(v3p - x, perp)[2])
    # a0 on O with a0 x perpendicular to x v3', on the v1 side
    c = (x - v3p)[:2]
    w = perp[:2] / np.linalg.norm(perp[:2])
    tau = -c @ w + math.sqrt((c @ w) ** 2 - c @ c + R * R)
    a0 = x + tau * np.array([w[0], w[1], 0.0])
    ang0, angp = _polar(a0 - v3p), _polar(a_prime - v3p)
    span = (angp - ang0) % (2 * math.pi)
    if span > math.pi:
        ang0, angp, span = angp, ang0, 2 * math.pi - span
    between = [p for p in sols if 0 < (p - ang0) % (2 * math.pi) < span]
    if len(between) != 1:
        raise SelectionFailure(f"case (c): {len(between)} solutions between a0 and a' (v3'={f})")
    a13 = on_O(between[0])
    gamma, ell = _angle(a, v3p, u1), float(np.linalg.norm(u1 - v3p))
    u13 = v3p + ell * _rotate_toward(a13 - v3p, x - v3p, gamma)
    a12 = float(np.linalg.norm(a13)) * _unit((v1 + v2) / 2)
    psi = _angle(a13, x, u13)
    u12 = float(np.linalg.norm(u13)) * _rotate_toward(a12, a13, psi)

    def mediator_line(p, q):
        # base-plane points m with |m - p| = |m - q|: n . m = c
        return (q - p)[:2], (q @ q - p @ p) / 2

    n13, c13 = mediator_line(u1, u13)
    n12, c12 = mediator_line(u1, u12)
    y1 = np.append(np.linalg.solve(np.array([n13, n12]), [c13, c12]), 0.0)
    a23, u23, u21, y2 = _mirror(a13), _mirror(u13), _mirror(u12), _mirror(y1)
    alpha = _angle(y1, u13, a13)
    beta = _angle(y1, u12, a12)
    trace = {"v3prime_fraction": f, "v3prime": v3p, "u1": u1, "u2": u2, "theta13": th13, "theta12": th12,
             "target": target, "O": {"center": v3p, "radius": R}, "solutions": [on_O(p) for p in sols],
             "a0": a0, "a_prime": a_prime, "a13": a13, "u13": u13, "a12": a12, "u12": u12,
             "L13": {"normal": n13, "offset": c13}, "L12": {"normal": n12, "offset": c12},
             "y1": y1, "a23": a23, "u23": u23, "u21": u21, "y2": y2, "alpha": alpha, "beta": beta}
    points = {"a": a, "u1": u1, "u2": u2, "v3p": v3p, "y1": y1, "y2": y2}
    edges = [("a", "u1"), ("u1", "y1"), ("a", "u2"), ("u2", "y2"), ("a", "v3p")]
    return _assemble(points, edges, params, trace, "case_c")


def _unit(v):
    return v / np.linalg.norm(v)


def _rotate_toward(d, toward, angle):
    """Unit vector at ``angle`` from ``d`` in the base plane, turning toward ``toward``."""
    d = _unit(d)
    sign = 1.0 if np.cross(d, toward)[2] > 0 else -1.0
    c, s = math.cos(angle), sign * math.sin(angle)
    return np.array([c * d[0] - s * d[1], s * d[0] + c * d[1], 0.0])


def case_d(params=None, *, n: int = 3, y_fraction: float = 0.9, u_fraction: float = 0.5):
    """Closed ring of degree-2 nodes, one per branch of the apex.

    Starts from the regular ``n``-gonal pyramid of :func:`skelocut.realize.base_solid`.
    ``y_i = x + y_fraction (v_i - x)``; the base lines ``L_i`` through
    ``y_i y_{i+1}`` are parallel to the base edges.  The line ``Delta_i``
    parallel to ``L_i`` at the height of ``u_i' = a + u_fraction (v_i - a)``
    is pushed outward until the geodesic from ``x`` to ``a`` crossing ``L_i``
    and ``Delta_i`` has the length ``delta`` of the unmodified solid;
    ``u_i = Delta_{i-1} & Delta_i``.

    Raises
    ------
    RootNotBracketed
        The starting line already gives a geodesic of length ``>= delta``.
    """
    from .realize import base_solid

    params = _params(params)
    if n < 3:
        raise InputError("case (d) needs at least 3 branches")
    if not (0 < y_fraction < 1 and 0 < u_fraction < 1):
        raise InputError("y_fraction and u_fraction must lie in (0, 1)")
    S: Polyhedron = base_solid(n, tol=params.tol)
    apex = int(np.argmax(S.vertices[:, 2]))
    a = S.vertices[apex]
    base = sorted((i for i in range(S.n_vertices) if i != apex), key=lambda i: _polar(S.vertices[i]))
    V = [S.vertices[i] for i in base]
    x = np.zeros(3)
    bface = next(f for f in range(S.n_faces) if apex not in S.faces[f])
    delta = geodesic_distance(S, locate(S, x, bface), vertex_point(apex))
    h = a[2] * (1 - u_fraction)
    ys = [y_fraction * v for v in V]
    deltas, images, offsets = [], [], []
    for i in range(n):
        p, q = ys[i], ys[(i + 1) % n]
        e = _unit(q - p)
        out = np.array([e[1], -e[0], 0.0])
        if out @ p < 0:
            out = -out
        d0 = float(((1 - u_fraction) * V[i]) @ out)

        def crossing(d, p=p, q=q, e=e, out=out):
            D = np.array([0.0, 0.0, h]) + d * out
            img = _hinge(_hinge(a, D, D + e, p), p, q, x)
            return float(np.linalg.norm(img)), img

        hi = 2 * d0 + 1.0
        while crossing(hi)[0] <= delta and hi < 1e3:
            hi *= 2
        d = _solve(lambda d: crossing(d)[0] - delta, d0, hi, params, f"case (d) line Delta_{i + 1}")
        offsets.append({"normal": out, "offset": d, "start": d0})
        deltas.append(crossing(d)[0])
        images.append(crossing(d)[1])
    us = []
    for i in range(n):
        L0, L1 = offsets[i - 1], offsets[i]
        M = np.array([L0["normal"][:2], L1["normal"][:2]])
        us.append(np.append(np.linalg.solve(M, [L0["offset"], L1["offset"]]), h))
    ratios = [float(np.linalg.norm(ys[i]) / np.linalg.norm(V[i])) for i in range(n)]
    trace = {"delta": delta, "delta_z": deltas, "Delta": offsets, "u": us, "y": ys, "a_images": images,
             "a_R": images[0], "a_L": images[-1], "ratios": ratios, "height": h}
    points = {"a": a}
    points.update({f"u{i + 1}": us[i] for i in range(n)})
    points.update({f"y{i + 1}": ys[i] for i in range(n)})
    edges = [("a", f"u{i + 1}") for i in range(n)] + [(f"u{i + 1}", f"y{i + 1}") for i in range(n)]
    return _assemble(points, edges, params, trace, "case_d")
