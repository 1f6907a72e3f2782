"""Command line entry: ``python -m lipdensity <experiment> [flags]``.

``list`` prints the catalogue; ``export-obj {gamma,wrinkle} PATH`` writes a
surface mesh.  Flags override values from ``--config``.  The exit status is
1 when any asserted invariant fails and 0 otherwise.
"""
from __future__ import annotations

import argparse
import sys

from .experiments import CATALOGUE, ExperimentConfig, export_obj, list_experiments, run


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--out", help="output directory for <name>.csv and <name>.json")
    p.add_argument("--n", type=int, help="dimension")
    p.add_argument("--p", type=float, help="Sobolev exponent")
    p.add_argument("--resolution", type=int, help="grid resolution")
    p.add_argument("--seed", type=int, help="seed for all random sampling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lipdensity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments")
    for name, (desc, _) in CATALOGUE.items():
        _common(sub.add_parser(name, help=desc))
    obj = sub.add_parser("export-obj", help="write a graph surface as an OBJ mesh")
    obj.add_argument("surface", choices=["gamma", "wrinkle"])
    obj.add_argument("path")
    _common(obj)
    return parser


def _config(name: str, args) -> ExperimentConfig:
    over = {k: getattr(args, k) for k in ("out", "n", "p", "resolution", "seed")}
    if args.config:
        return ExperimentConfig.from_file(args.config, name=name, **over)
    return ExperimentConfig.from_dict({"name": name}, **over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc, anchor in list_experiments():
            print(f"{name:15s} {desc} [{anchor}]")
        return 0
    if args.command == "export-obj":
        kind = "pi-m" if args.surface == "gamma" else "wrinkle"
        count = export_obj(args.surface, args.path, _config(kind, args))
        print(f"wrote {args.path} ({count} vertices)")
        return 0
    cfg = _config(args.command, args)
    rep = run(cfg)
    for key, val in rep.invariants.items():
        print(f"{'PASS' if val['pass'] else 'FAIL'}  {key}")
    if rep.error:
        print(f"error: {rep.error}", file=sys.stderr)
    print(f"{cfg.name}: {len(rep.rows)} rows in {rep.wall_time:.2f}s -> {cfg.out}", file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
