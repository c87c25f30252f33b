import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from skelocut import ParseError, face_centroid, parse_tree, realize_tree, source_unfolding
from skelocut import solids
from skelocut.geodesic.unfold import Net, PlacedPolygon
from skelocut.netio import (
    SvgScene,
    dumps_json,
    export_obj,
    export_svg_net,
    import_obj,
    net_area_matches,
    net_nonoverlap,
    net_to_dict,
    vertex_rays,
)

SVG = "{http://www.w3.org/2000/svg}"


def _net(*polys):
    return Net([PlacedPolygon(k, list(p), [(*c, 0.0) for c in p]) for k, p in enumerate(polys)], (0.0, 0.0))


# -- OBJ ------------------------------------------------------------------------


@pytest.mark.parametrize("make", [solids.tetrahedron, solids.cube, solids.icosahedron])
def test_obj_round_trip(make):
    P = make()
    Q = import_obj(export_obj(P))
    assert Q.faces == P.faces
    assert np.max(np.abs(Q.vertices - P.vertices)) <= 1e-12


def test_obj_round_trip_of_realized_dome_is_idempotent():
    P = realize_tree(parse_tree("(((()()())())()())")).polyhedron
    once = export_obj(import_obj(export_obj(P)))
    assert export_obj(import_obj(once)) == once
    assert import_obj(once).faces == P.faces


def test_obj_tolerates_comments_and_texture_indices():
    text = "# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvn 0 0 1\nf 1/1/1 3/1/1 2/1/1\nf 1 2 4\nf 2 3 4\nf -4 -1 -2\n"
    P = import_obj(text)
    assert (P.n_vertices, P.n_faces) == (4, 4)


@pytest.mark.parametrize("text, line", [("v 0 0\nf 1 2 3\n", 1), ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", 4),
                                        ("v 0 0 0\nf 1 x 2\n", 2), ("v 0 0 nan\n", 1)])
def test_obj_malformed(text, line):
    with pytest.raises(ParseError) as info:
        import_obj(text)
    assert info.value.offset == f"line {line}"


def test_obj_without_faces():
    with pytest.raises(ParseError):
        import_obj("v 0 0 0\n")


# -- JSON -----------------------------------------------------------------------


def test_json_float_format():
    text = dumps_json({"a": 0.1, "b": 1.0, "c": [np.float64(2.5), np.int64(3)], "d": np.array([1e-20])},
                      schema="s/1")
    assert text.startswith('{\n "schema": "s/1"')
    assert "0.10000000000000001" in text
    assert '"b": 1.0' in text
    assert "9.9999999999999995e-21" in text


def test_json_is_deterministic():
    net = source_unfolding(solids.cube(), face_centroid(solids.cube(), 0))
    assert dumps_json(net_to_dict(net)) == dumps_json(net_to_dict(source_unfolding(
        solids.cube(), face_centroid(solids.cube(), 0))))


# -- nets -----------------------------------------------------------------------


def test_overlapping_squares():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    shifted = [(x + 0.5, y) for x, y in sq]
    assert not net_nonoverlap(_net(sq, shifted))


def test_squares_sharing_an_edge():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    right = [(x + 1, y) for x, y in sq]
    assert net_nonoverlap(_net(sq, right))


def test_nested_polygon_overlaps():
    big = [(0, 0), (4, 0), (4, 4), (0, 4)]
    small = [(1, 1), (2, 1), (2, 2), (1, 2)]
    assert not net_nonoverlap(_net(big, small))


def test_net_area():
    P = solids.cube()
    net = source_unfolding(P, face_centroid(P, 0))
    assert net_area_matches(net, P)
    assert net.area == pytest.approx(6.0, rel=1e-12)


# -- SVG ------------------------------------------------------------------------


def _parse(svg):
    return ET.fromstring(svg.decode())


def test_tetrahedron_svg():
    P = solids.tetrahedron()
    net = source_unfolding(P, face_centroid(P, 0))
    root = _parse(export_svg_net(net, {"bisectors": vertex_rays(net, P)}))
    faces = root.find(f"{SVG}g[@id='faces']")
    assert len(faces.findall(f"{SVG}polygon")) == 4
    # the apex, a leaf of the cut locus, has three images in the net
    apex = (set(range(4)) - set(P.faces[0])).pop()
    images = {(round(c[0], 9), round(c[1], 9)) for poly in net.polygons
              for c, p3 in zip(poly.coords, poly.points3d) if np.linalg.norm(np.asarray(p3) - P.vertices[apex]) < 1e-9}
    assert len(images) == 3
    assert len(vertex_rays(net, P)) == 6
    assert root.find(f"{SVG}g[@id='source']/{SVG}circle") is not None


def test_cube_svg_has_six_pieces():
    P = solids.cube()
    net = source_unfolding(P, face_centroid(P, 0))
    root = _parse(export_svg_net(net))
    assert len(root.find(f"{SVG}g[@id='faces']").findall(f"{SVG}polygon")) >= 6
    assert {p.face for p in net.polygons} == set(range(6))
    assert net_nonoverlap(net)


def test_empty_overlays_and_layer_toggle():
    P = solids.tetrahedron()
    net = source_unfolding(P, face_centroid(P, 1))
    root = _parse(export_svg_net(net, {}))
    assert root.get("version") == "1.1"
    scene = SvgScene()
    scene.layers["faces"] = False
    root = _parse(export_svg_net(net, None, scene))
    assert root.find(f"{SVG}g[@id='faces']") is None
    assert root.find(f"{SVG}g[@id='cut_locus']") is not None


def test_svg_coordinates_are_finite_and_flipped():
    sq = [(0, 0), (1, 0), (1, 2), (0, 2)]
    root = _parse(export_svg_net(_net(sq), scene=SvgScene(viewport=(0, 0, 1, 2), width=100)))
    pts = root.find(f"{SVG}g[@id='faces']/{SVG}polygon").get("points").split()
    xy = [tuple(map(float, p.split(","))) for p in pts]
    assert all(math.isfinite(v) for p in xy for v in p)
    # model (0, 0) is the bottom-left corner of the picture
    assert xy[0] == (0.0, 200.0)
