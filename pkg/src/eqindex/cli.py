"""Command line front end: ``eqindex --scene NAME`` or ``eqindex --check``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import FORMATS, SCENES, load_config, validate, with_overrides
from .errors import ConfigError, EqIndexError


def _t_grid(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad t-grid {text!r}; expected a,b,c") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eqindex", description="Equivariant index scenes and cross-checks.")
    p.add_argument("--scene", help=f"one of: {', '.join(SCENES)}")
    p.add_argument("--config", metavar="PATH", help="JSON config file or inline JSON object")
    p.add_argument("--t-grid", type=_t_grid, metavar="a,b,c", help="decreasing heat times")
    p.add_argument("--cutoff", type=int, metavar="N", help="lattice cutoff for spectral sums")
    p.add_argument("--mesh", type=int, metavar="N", help="mesh resolution")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--format", choices=FORMATS, help="report format (default json)")
    p.add_argument("--check", action="store_true", help="run the acceptance suite")
    p.add_argument("--timings", action="store_true", help="include wall-clock times in the report")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _resolve(args):
    if args.config:
        cfg = load_config(args.config)
        if args.scene:
            cfg = with_overrides(cfg, scene=args.scene)
    elif args.scene:
        cfg = validate({"scene": args.scene})
    else:
        raise ConfigError("give --scene, --config or --check")
    return with_overrides(cfg, t_grid=args.t_grid, lattice_cutoff=args.cutoff,
                          mesh_resolution=args.mesh, output=args.out, format=args.format)


def _check(out) -> int:
    from .acceptance import run_all

    results = run_all(echo=lambda line: print(line, file=out))
    failed = [r.code for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed", file=out)
    return 3 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.check:
        return _check(sys.stdout)
    from .report import check_table, render
    from .scenes import run_scene

    try:
        cfg = _resolve(args)
    except EqIndexError as exc:
        print(f"eqindex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    try:
        rep = run_scene(cfg, timings=args.timings)
    except EqIndexError as exc:
        print(f"eqindex: scene {cfg.scene}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    text = render(rep, cfg.format)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not rep.passed:
        print(check_table(rep), file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
