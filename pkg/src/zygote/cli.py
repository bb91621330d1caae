"""Command-line front end.

Exit codes: 0 ok, 2 input error, 3 search failure, 4 verification failure.
Reports go to standard output as ``KEY value`` lines, logs to standard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .foldsim import (MODES, compute_ver, deploy_poses, export_obj, flatten_map, format_records,
                      stacked_layout, verify_deployed)
from .geometry import DualGraph, GeometryError, build_sheet, extract_dual_graph, format_voxels, read_obj, \
    read_voxels, voxelize
from .sequence import SequenceFormatError, format_sequence, parse_sequence
from .treestack import DEFAULT_MAX_RESTARTS, POLICIES, Failure, stack_pipeline

log = logging.getLogger("zygote")

EXIT_OK, EXIT_INPUT, EXIT_SEARCH, EXIT_VERIFY = 0, 2, 3, 4
SHEET_TAG = "SHEET"


class InputError(Exception):
    pass


def _sheet_dims(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        rows, cols = int(r), int(c)
    except ValueError:
        raise InputError(f"sheet size must look like 12x12, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise InputError("sheet needs at least one row and one column")
    return rows, cols


def load_model(args: argparse.Namespace) -> tuple[DualGraph, str]:
    """Dual graph of the model named by the flags, plus its saved text form."""
    if args.sheet:
        rows, cols = _sheet_dims(args.sheet)
        return build_sheet(rows, cols), f"{SHEET_TAG} {rows} {cols}\n"
    if args.voxels:
        path = Path(args.voxels)
        text = path.read_text(encoding="utf-8")
        first = text.split(None, 1)[0] if text.strip() else ""
        if first == SHEET_TAG:
            parts = text.split()
            return build_sheet(int(parts[1]), int(parts[2])), text
        cells = read_voxels(path)
        return extract_dual_graph(cells), format_voxels(cells)
    if args.mesh:
        if args.res is None:
            raise InputError("--mesh needs --res")
        vertices, faces = read_obj(args.mesh)
        cells = voxelize(vertices, faces, args.res)
        return extract_dual_graph(cells), format_voxels(cells)
    raise InputError("one of --sheet, --voxels or --mesh is required")


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_sequence(path: str):
    return parse_sequence(Path(path).read_text(encoding="utf-8"))


def cmd_panelize(args: argparse.Namespace) -> int:
    g, saved = load_model(args)
    if args.out:
        Path(args.out).write_text(saved, encoding="utf-8")
    hist = " ".join(f"{d}:{c}" for d, c in g.degree_histogram().items())
    sys.stdout.write(format_records({"N": len(g.nodes), "E": len(g.edges), "DEGREES": hist}))
    return EXIT_OK


def cmd_stack(args: argparse.Namespace) -> int:
    g, _ = load_model(args)
    n = len(g.nodes)
    if args.piles < 1:
        raise InputError("--piles must be >= 1")
    if n % args.piles:
        raise InputError(f"panel count {n} not divisible by pile count {args.piles}")
    log.info("stacking %d panels into %d piles, seed %d", n, args.piles, args.seed)
    result = stack_pipeline(g, args.piles, seed=args.seed, max_restarts=args.max_restarts, policy=args.policy)
    if isinstance(result, Failure):
        log.error("%s", result)
        only_verify = set(result.stages) == {"verify"}
        return EXIT_VERIFY if only_verify else EXIT_SEARCH
    _write(format_sequence(result), args.out)
    heights = result.pile_heights()
    log.info("piles %d x %d, bridges %d, breaks %d", len(heights), heights[0], len(result.bridges),
             len(result.breaks))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cs = _read_sequence(args.sequence)
    g, _ = load_model(args)
    problems = cs.problems()
    deployed = verify_deployed(deploy_poses(cs), g)
    stacked = stacked_layout(cs)
    records = {"STRUCTURE": "ok" if not problems else problems[0]}
    records.update({f"DEPLOYED_{k}": v for k, v in deployed.records().items()})
    records.update({f"STACKED_{k}": v for k, v in stacked.records().items()})
    ok = not problems and deployed.ok and stacked.ok
    records["OK"] = int(ok)
    sys.stdout.write(format_records(records))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_deploy(args: argparse.Namespace) -> int:
    cs = _read_sequence(args.sequence)
    _write(export_obj(deploy_poses(cs, args.mode), scale=args.scale), args.out)
    return EXIT_OK


def cmd_flatten(args: argparse.Namespace) -> int:
    cs = _read_sequence(args.sequence)
    report = flatten_map(cs)
    text = format_records(report.records())
    text += "".join("GRID " + " ".join(map(str, row)) + "\n" for row in report.grid())
    _write(text, args.out)
    return EXIT_OK


def cmd_ver(args: argparse.Namespace) -> int:
    cs = _read_sequence(args.sequence)
    if args.lratio <= 0:
        raise InputError("--lratio must be positive")
    _write(format_records(compute_ver(cs, lratio=args.lratio).records()), args.out)
    return EXIT_OK


def _model_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--sheet", metavar="RxC", help="open sheet of R rows and C columns")
    group.add_argument("--voxels", metavar="F", help="voxel file (one 'x y z' per line)")
    group.add_argument("--mesh", metavar="F", help="closed triangle mesh in OBJ format")
    p.add_argument("--res", type=int, help="voxel resolution along the longest mesh axis")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="F", help="output file (default: standard output)")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zygote", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("panelize", help="panelize a model and print dual-graph statistics")
    _model_flags(p)
    _common(p)
    p.set_defaults(func=cmd_panelize)

    p = sub.add_parser("stack", help="compute a coded sequence")
    _model_flags(p)
    _common(p)
    p.add_argument("--piles", type=int, required=True, metavar="K")
    p.add_argument("--max-restarts", type=int, default=DEFAULT_MAX_RESTARTS, metavar="M")
    p.add_argument("--policy", choices=POLICIES, default="single", help="bridge selection")
    p.add_argument("--lratio", type=float, default=100.0, metavar="X")
    p.set_defaults(func=cmd_stack)

    p = sub.add_parser("verify", help="check a coded sequence against its model")
    p.add_argument("sequence")
    _model_flags(p)
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("deploy", help="export panel geometry as OBJ")
    p.add_argument("sequence")
    _common(p)
    p.add_argument("--mode", choices=MODES, default="deployed")
    p.add_argument("--scale", type=float, default=1.0, help="panel side length")
    p.set_defaults(func=cmd_deploy)

    p = sub.add_parser("flatten", help="panel counts per cell with every hinge opened flat")
    p.add_argument("sequence")
    _common(p)
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("ver", help="volume expansion ratio")
    p.add_argument("sequence")
    _common(p)
    p.add_argument("--lratio", type=float, default=100.0, metavar="X", help="panel side over thickness")
    p.set_defaults(func=cmd_ver)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, GeometryError, SequenceFormatError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
