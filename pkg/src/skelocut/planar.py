"""Small exact-ish planar predicates for polygons given as vertex lists."""

import math


def orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def signed_area(poly) -> float:
    s = 0.0
    for k in range(len(poly)):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return s / 2


def point_segment_distance(p, a, b) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
    return math.hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy)


def segments_cross(a, b, c, d, tol) -> bool:
    """True if the open segments ``ab`` and ``cd`` cross at a single interior point."""
    lab = math.hypot(b[0] - a[0], b[1] - a[1])
    lcd = math.hypot(d[0] - c[0], d[1] - c[1])
    if lab <= tol or lcd <= tol:
        return False
    o1, o2 = orient(a, b, c) / lab, orient(a, b, d) / lab
    o3, o4 = orient(c, d, a) / lcd, orient(c, d, b) / lcd
    return ((o1 > tol and o2 < -tol) or (o1 < -tol and o2 > tol)) and \
           ((o3 > tol and o4 < -tol) or (o3 < -tol and o4 > tol))


def point_in_polygon(p, poly, tol) -> int:
    """+1 strictly inside, -1 strictly outside, 0 within ``tol`` of the boundary."""
    for k in range(len(poly)):
        if point_segment_distance(p, poly[k], poly[(k + 1) % len(poly)]) <= tol:
            return 0
    inside = False
    x, y = p
    for k in range(len(poly)):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % len(poly)]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if xc > x:
                inside = not inside
    return 1 if inside else -1


def _probe_points(poly, delta):
    """Points just inside ``poly`` next to each edge midpoint."""
    ccw = signed_area(poly) > 0
    out = []
    for k in range(len(poly)):
        a, b = poly[k], poly[(k + 1) % len(poly)]
        dx, dy = b[0] - a[0], b[1] - a[1]
        L = math.hypot(dx, dy)
        if L <= 4 * delta:
            continue
        nx, ny = (-dy / L, dx / L) if ccw else (dy / L, -dx / L)
        out.append(((a[0] + b[0]) / 2 + delta * nx, (a[1] + b[1]) / 2 + delta * ny))
    return out


def polygons_overlap(A, B, tol) -> bool:
    """Whether two simple polygons share interior points (touching allowed)."""
    ax = [p[0] for p in A]
    ay = [p[1] for p in A]
    bx = [p[0] for p in B]
    by = [p[1] for p in B]
    if min(ax) > max(bx) - tol or min(bx) > max(ax) - tol or min(ay) > max(by) - tol or min(by) > max(ay) - tol:
        return False
    for i in range(len(A)):
        a, b = A[i], A[(i + 1) % len(A)]
        for j in range(len(B)):
            if segments_cross(a, b, B[j], B[(j + 1) % len(B)], tol):
                return True
    delta = 1e3 * tol
    for p in _probe_points(A, delta):
        if point_in_polygon(p, B, tol) == 1:
            return True
    for p in _probe_points(B, delta):
        if point_in_polygon(p, A, tol) == 1:
            return True
    return False
