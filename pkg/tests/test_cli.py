import json
import subprocess
import sys

import pytest

from skelocut import cli, import_obj
from skelocut.cli import HIST_FREE, main

SEVEN_LEAF = "(((()())())(()())(()()))"


@pytest.fixture
def example(tmp_path):
    def make(name):
        assert main(["examples", name, "--out-dir", str(tmp_path)]) == 0
        return next(tmp_path.glob(f"{name}.*"))
    return make


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_realize_star(tmp_path):
    out = tmp_path / "out"
    assert main(["realize", write(tmp_path, "t.txt", "(()()())"), "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["net.svg", "polyhedron.obj", "realization.json"]
    P = import_obj((out / "polyhedron.obj").read_bytes())
    assert (P.n_vertices, P.n_faces) == (4, 4)
    data = json.loads((out / "realization.json").read_text())
    assert data["schema"] == "skelocut.realization/1"


def test_realize_seven_leaf(tmp_path):
    out = tmp_path / "out"
    assert main(["realize", write(tmp_path, "t.txt", SEVEN_LEAF), "--out-dir", str(out)]) == 0
    data = json.loads((out / "realization.json").read_text())
    kinds = [s["kind"] for s in data["trace"]["steps"]]
    assert kinds.count("truncation_chain") == 4


def test_realize_path_is_degenerate(tmp_path):
    out = tmp_path / "out"
    assert main(["realize", write(tmp_path, "t.txt", "((()))"), "--out-dir", str(out)]) == 0
    assert json.loads((out / "realization.json").read_text())["polyhedron"]["degenerate"] is True


def test_realize_is_byte_deterministic(tmp_path):
    tree = write(tmp_path, "t.txt", "((())(())())")
    for d in ("a", "b"):
        assert main(["realize", tree, "--out-dir", str(tmp_path / d)]) == 0
    for name in ("realization.json", "polyhedron.obj", "net.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_realize_failure_dumps_trace(tmp_path):
    out = tmp_path / "out"
    assert main(["realize", write(tmp_path, "t.txt", "(())"), "--out-dir", str(out)]) == 2
    data = json.loads((out / "failure.json").read_text())
    assert data["schema"] == "skelocut.failure/1" and "error" in data


def test_realize_json_tree_from_stdin(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", __import__("io").StringIO('{"edges": [[0, 1], [0, 2], [0, 3]]}'))
    assert main(["realize", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["schema"] == "skelocut.realization/1"


def test_bad_tree_text(tmp_path, capsys):
    assert main(["realize", write(tmp_path, "t.txt", "(()")]) == 2
    assert "input error" in capsys.readouterr().err


@pytest.mark.parametrize("name, flat, best", [("tetrahedron", 4, 3), ("cube", 0, 4), ("icosahedron", 0, 6)])
def test_scan(example, capsys, name, flat, best):
    obj = example(name)
    assert main(["scan", str(obj)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["n_skeletal_flat"] == flat
    assert data["L_lower_bound"] == best


def test_scan_invalid_mesh(tmp_path, capsys):
    assert main(["scan", write(tmp_path, "bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n")]) == 2
    assert "line 4" in capsys.readouterr().err


def test_cutlocus_tetra_face_center(example, capsys):
    assert main(["cutlocus", str(example("tetrahedron")), "--source", "face:0:centroid"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["covered_edges"]) == 3 and data["skeletal"] is True


def test_unfold_writes_net(example, tmp_path):
    out = tmp_path / "u"
    assert main(["unfold", str(example("cube")), "--source", "face:0:0.2,0.3,0.5", "--out-dir", str(out)]) == 0
    assert json.loads((out / "net.json").read_text())["schema"] == "skelocut.net/1"
    assert (out / "net.svg").read_bytes().startswith(b"<?xml")


def test_bad_source_spec(example):
    assert main(["cutlocus", str(example("cube")), "--source", "edge:99:0.5"]) == 2


@pytest.mark.parametrize("name, verdict", [("cube", HIST_FREE), ("octahedron", "HIST found")])
def test_hist_on_meshes(example, capsys, name, verdict):
    assert main(["hist", str(example(name))]) == 0
    assert capsys.readouterr().out.startswith(verdict)


def test_hist_on_dodecahedron_edge_list(example, capsys):
    assert main(["hist", str(example("dodecahedron-graph"))]) == 0
    assert capsys.readouterr().out.strip() == HIST_FREE


def test_hist_json_graph(tmp_path, capsys):
    assert main(["hist", write(tmp_path, "k4.json", '{"edges": [[0,1],[0,2],[0,3],[1,2],[1,3],[2,3]]}')]) == 0
    assert capsys.readouterr().out.startswith("HIST found")


def test_examples_dipyramid(example):
    P = import_obj(example("dipyramid-5").read_bytes())
    assert (P.n_vertices, P.n_edges, P.n_faces) == (7, 15, 10)


def test_examples_stacked_pyramid(example):
    P = import_obj(example("stacked-pyramid").read_bytes())
    assert P.n_vertices == 7


def test_verification_failure_writes_nothing(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli.netio, "net_nonoverlap", lambda net: False)
    out = tmp_path / "out"
    assert main(["realize", write(tmp_path, "t.txt", "(()()())"), "--out-dir", str(out)]) == 3
    assert not out.exists()
    assert "verification failed" in capsys.readouterr().err


def test_overrides_reach_the_config():
    args = cli.build_parser().parse_args(["realize", "t", "--z-fraction", "0.4", "--tol-len", "1e-10", "--seed", "3"])
    cfg = cli.RunConfig.from_args(args)
    assert cfg.params.z_fraction == 0.4 and cfg.params.seed == 3
    assert cfg.tol.tol_len == 1e-10 and cfg.params.tol is cfg.tol


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "skelocut.cli", "hist", write(tmp_path, "g.txt", "a b\nb c\nc a\n")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.strip() == HIST_FREE

