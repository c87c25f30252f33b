import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelocut import InputError, edge_point, face_centroid, parse_source, vertex_point
from skelocut import solids
from skelocut.surface import canonical, face_point, faces_of, locate, position

CUBE = solids.cube()


def test_edge_endpoint_is_a_vertex():
    i, _ = CUBE.edges[0]
    assert canonical(CUBE, edge_point(CUBE, 0, 0.0)) == vertex_point(i)


def test_face_point_on_boundary_is_an_edge_point():
    f = CUBE.faces[0]
    sp = canonical(CUBE, face_point(CUBE, 0, [0.5, 0.5, 0.0, 0.0]))
    assert sp.kind == "edge"
    assert np.allclose(position(CUBE, sp), (CUBE.vertices[f[0]] + CUBE.vertices[f[1]]) / 2)


def test_parse_source_forms():
    assert parse_source(CUBE, "vertex:3") == vertex_point(3)
    assert parse_source(CUBE, "face:2:centroid") == face_centroid(CUBE, 2)
    three = parse_source(CUBE, "face:0:0.2,0.3,0.5")
    four = parse_source(CUBE, "face:0:0.2,0.3,0.5,0")
    assert np.allclose(position(CUBE, three), position(CUBE, four))


@pytest.mark.parametrize("text", ["vertex", "vertex:99", "edge:0:2", "face:0:a,b,c", "blob:1", "face:0:0.5,0.6,0.7"])
def test_parse_source_errors(text):
    with pytest.raises(InputError):
        parse_source(CUBE, text)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_canonical_form_is_unique_per_point(f, a, b, c):
    w = np.array([a, b, c, 0.0]) + 1e-3
    w /= w.sum()
    sp = canonical(CUBE, face_point(CUBE, f, list(w)))
    p = position(CUBE, sp)
    if sp.kind == "face":
        assert sum(sp.params) == pytest.approx(1.0)
    # locating the same 3D point from any incident face gives the same anchor
    for g in faces_of(CUBE, sp):
        again = canonical(CUBE, locate(CUBE, p, g))
        assert (again.kind, again.index) == (sp.kind, sp.index)
        assert np.allclose(position(CUBE, again), p, atol=1e-12)
