"""Command-line front end.

Exit codes: 0 success, 2 bad input or failed realization, 3 an internal
verification failed.  Nothing is written unless it verified.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from . import netio, solids
from .errors import InputError, RealizationFailure, SkelocutError, VerificationError
from .geodesic import cut_locus, source_unfolding
from .poly import DEFAULT_TOL, ToleranceConfig
from .realize import ConstructionParams, case_d, realize_tree
from .skeletal import has_hist, scan_skeletal
from .surface import parse_source
from .treespec import load_tree

log = logging.getLogger("skelocut")

EXIT_INPUT = 2
EXIT_VERIFY = 3

EXAMPLES = ("tetrahedron", "cube", "octahedron", "icosahedron", "dodecahedron-graph", "dipyramid-5",
            "stacked-pyramid")
HIST_FREE = "HIST-free: no skeletal cut locus possible"


class VerifyFailed(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    out_dir: Path = None
    params: ConstructionParams = field(default_factory=ConstructionParams)
    tol: ToleranceConfig = DEFAULT_TOL
    seed: int = 0
    source: str = None

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        tol = ToleranceConfig(
            args.tol_plane if args.tol_plane is not None else DEFAULT_TOL.tol_plane,
            args.tol_len if args.tol_len is not None else DEFAULT_TOL.tol_len,
            args.tol_angle if args.tol_angle is not None else DEFAULT_TOL.tol_angle,
        )
        over = {"tol": tol, "seed": args.seed}
        if args.z_fraction is not None:
            over["z_fraction"] = args.z_fraction
        if args.margin_eps is not None:
            over["margin_eps"] = args.margin_eps
        inputs = [v for v in (getattr(args, "input", None), getattr(args, "name", None)) if v is not None]
        return cls(args.command, inputs, Path(args.out_dir) if args.out_dir else None,
                   ConstructionParams().replace(**over), tol, args.seed, getattr(args, "source", None))


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _emit(cfg: RunConfig, name: str, data, stdout=True):
    """Write an artifact into the output directory, or to stdout without one."""
    raw = data.encode() if isinstance(data, str) else data
    if cfg.out_dir is None:
        if stdout:
            sys.stdout.write(raw.decode())
        return
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / name).write_bytes(raw)
    log.info("wrote %s", cfg.out_dir / name)


def _checked_net(P, x):
    net = source_unfolding(P, x)
    if not netio.net_nonoverlap(net):
        raise VerifyFailed("source unfolding overlaps itself")
    if not netio.net_area_matches(net, P):
        raise VerifyFailed(f"net area {net.area!r} differs from surface area {P.surface_area!r}")
    return net


def cmd_realize(cfg: RunConfig) -> int:
    T = load_tree(_read(cfg.inputs[0]))
    try:
        R = realize_tree(T, cfg.params)
    except RealizationFailure as exc:
        dump = {"error": str(exc), "step": exc.step, "trace": exc.trace.to_dict() if exc.trace else None}
        _emit(cfg, "failure.json", netio.dumps_json(dump, schema="skelocut.failure/1"), stdout=False)
        print(f"realization failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = R.verify()
    if not report.passed:
        raise VerifyFailed(f"realization does not verify: {report.failures()}")
    net = _checked_net(R.polyhedron, R.source)
    _emit(cfg, "realization.json", netio.dumps_json(R.to_dict(), schema="skelocut.realization/1"))
    _emit(cfg, "polyhedron.obj", netio.export_obj(R.polyhedron), stdout=False)
    _emit(cfg, "net.svg", netio.export_svg_net(net, {"bisectors": netio.vertex_rays(net, R.polyhedron)}),
          stdout=False)
    return 0


def _load_obj(cfg: RunConfig):
    return netio.import_obj(_read(cfg.inputs[0]), tol=cfg.tol)


def cmd_scan(cfg: RunConfig) -> int:
    P = _load_obj(cfg)
    report = scan_skeletal(P, verify=True)
    _emit(cfg, "scan.json", netio.dumps_json(report.to_dict(), schema="skelocut.scan/1"))
    return 0


def cmd_cutlocus(cfg: RunConfig) -> int:
    P = _load_obj(cfg)
    x = parse_source(P, cfg.source)
    C = cut_locus(P, x)
    net = _checked_net(P, x)
    _emit(cfg, "cutlocus.json", netio.dumps_json(C.to_dict(), schema="skelocut.cutlocus/1"))
    _emit(cfg, "cutlocus.svg", netio.export_svg_net(net), stdout=False)
    return 0


def cmd_unfold(cfg: RunConfig) -> int:
    P = _load_obj(cfg)
    x = parse_source(P, cfg.source)
    net = _checked_net(P, x)
    _emit(cfg, "net.json", netio.dumps_json(netio.net_to_dict(net), schema="skelocut.net/1"))
    _emit(cfg, "net.svg", netio.export_svg_net(net, {"bisectors": netio.vertex_rays(net, P)}), stdout=False)
    return 0


def read_graph(text: str) -> nx.Graph:
    """Edge list (``u v`` per line), JSON ``{"edges": [...]}`` or an OBJ mesh (its skeleton)."""
    s = text.strip()
    if s.startswith("{"):
        try:
            return nx.Graph([tuple(e) for e in json.loads(s)["edges"]])
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"bad graph JSON: {exc}") from None
    if any(line.split()[:1] in (["v"], ["f"]) for line in s.splitlines()):
        return netio.import_obj(s).skeleton
    G = nx.Graph()
    for lineno, line in enumerate(s.splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'u v'")
        G.add_edge(*parts)
    return G


def cmd_hist(cfg: RunConfig) -> int:
    G = read_graph(_read(cfg.inputs[0]))
    if G.number_of_nodes() == 0:
        raise InputError("empty graph")
    if has_hist(G):
        print("HIST found: the combinatorial restriction does not exclude a skeletal cut locus")
    else:
        print(HIST_FREE)
    return 0


def example_artifact(name: str, tol=DEFAULT_TOL):
    """``(file name, bytes)`` of a built-in example."""
    if name == "dodecahedron-graph":
        G = solids.dodecahedron(tol).skeleton
        return "dodecahedron-graph.txt", "".join(f"{u} {v}\n" for u, v in sorted(G.edges)).encode()
    makers = {
        "tetrahedron": solids.tetrahedron, "cube": solids.cube, "octahedron": solids.octahedron,
        "icosahedron": solids.icosahedron, "dipyramid-5": lambda tol: solids.dipyramid(5, tol),
        "stacked-pyramid": lambda tol: case_d(ConstructionParams(tol=tol)).polyhedron,
    }
    if name not in makers:
        raise InputError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    return f"{name}.obj", netio.export_obj(makers[name](tol))


def cmd_examples(cfg: RunConfig) -> int:
    fname, data = example_artifact(cfg.inputs[0], cfg.tol)
    _emit(cfg, fname, data)
    return 0


COMMANDS = {"realize": cmd_realize, "scan": cmd_scan, "cutlocus": cmd_cutlocus, "unfold": cmd_unfold,
            "hist": cmd_hist, "examples": cmd_examples}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-plane", type=float)
    common.add_argument("--tol-len", type=float)
    common.add_argument("--tol-angle", type=float)
    common.add_argument("--z-fraction", type=float)
    common.add_argument("--margin-eps", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", help="write artifacts here (default: main artifact to stdout)")
    p = argparse.ArgumentParser(prog="skelocut", description="Skeletal cut loci on convex polyhedra.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("realize", parents=[common], help="realize a tree as a skeletal cut locus")
    s.add_argument("input", help="tree file (parenthesis or JSON form), '-' for stdin")
    s = sub.add_parser("scan", parents=[common], help="scan a solid for skeletal sources")
    s.add_argument("input", help="OBJ file")
    for name, what in (("cutlocus", "cut locus"), ("unfold", "source unfolding")):
        s = sub.add_parser(name, parents=[common], help=f"{what} of a source point")
        s.add_argument("input", help="OBJ file")
        s.add_argument("--source", required=True, help="vertex:i | edge:i:t | face:i:centroid | face:i:b1,b2,b3")
    s = sub.add_parser("hist", parents=[common], help="HIST test on a graph")
    s.add_argument("input", help="edge list, JSON or OBJ file")
    s = sub.add_parser("examples", parents=[common], help="emit a built-in example")
    s.add_argument("name", choices=EXAMPLES)
    return p


def main(argv=None) -> int:
    level = os.environ.get("SKELOCUT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (VerifyFailed, VerificationError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (InputError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SkelocutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
