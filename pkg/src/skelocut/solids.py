"""Golden solids used by tests, the scanner and the CLI."""

import itertools

import numpy as np

from .poly import DEFAULT_TOL, convex_hull, doubly_covered_polygon, make_bipyramid

PHI = (1 + 5 ** 0.5) / 2


def tetrahedron(tol=DEFAULT_TOL):
    """Regular tetrahedron with unit edge length."""
    pts = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], dtype=float)
    return convex_hull(pts / (2 * 2 ** 0.5), tol)


def cube(tol=DEFAULT_TOL):
    return convex_hull(np.array(list(itertools.product((0.0, 1.0), repeat=3))), tol)


def octahedron(tol=DEFAULT_TOL):
    pts = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            p = [0.0, 0.0, 0.0]
            p[axis] = sign
            pts.append(p)
    return convex_hull(np.array(pts), tol)


def icosahedron(tol=DEFAULT_TOL):
    pts = []
    for a, b in itertools.product((1.0, -1.0), (PHI, -PHI)):
        pts += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    return convex_hull(np.array(pts) / 2, tol)


def dodecahedron(tol=DEFAULT_TOL):
    pts = [p for p in itertools.product((1.0, -1.0), repeat=3)]
    inv = 1 / PHI
    for a, b in itertools.product((1.0, -1.0), repeat=2):
        pts += [(0.0, a * inv, b * PHI), (a * inv, b * PHI, 0.0), (a * PHI, 0.0, b * inv)]
    return convex_hull(np.array(pts), tol)


def dipyramid(n=5, tol=DEFAULT_TOL):
    """Regular ``n``-gonal dipyramid with equilateral lateral faces when possible."""
    edge = 2 * np.sin(np.pi / n)
    height = np.sqrt(max(edge ** 2 - 1.0, 0.0)) or 1.0
    return make_bipyramid(n, height, tol)


def squashed_octahedron(a=1.0, b=0.9, c=0.8, tol=DEFAULT_TOL):
    """Octahedron with vertices on the axes at distances ``a, b, c``."""
    pts = [(a, 0, 0), (-a, 0, 0), (0, b, 0), (0, -b, 0), (0, 0, c), (0, 0, -c)]
    return convex_hull(np.array(pts, dtype=float), tol)


def doubly_covered_square(tol=DEFAULT_TOL):
    return doubly_covered_polygon([(0, 0), (1, 0), (1, 1), (0, 1)], tol)


def regular_polygon(n, radius=1.0):
    ang = 2 * np.pi * np.arange(n) / n
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
