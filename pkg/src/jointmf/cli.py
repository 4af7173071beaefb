"""Command-line entry point: ``jointmf {generate,analyze,windows,oracle,compare}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .errors import JointMFError, ParameterError
from .measures import BfbmSpec, BinomialSpec, gen_bfbm, gen_binomial, write_values_csv
from .partition import MomentGrid
from .workflow import (
    INPUT_KINDS,
    METHODS,
    AnalysisConfig,
    Tolerances,
    WindowSpec,
    cmd_analyze,
    cmd_oracle,
    cmd_oracle_compare,
    cmd_windows,
    load_config,
    parse_fit_range,
    parse_grid,
)

log = logging.getLogger("jointmf")


def _add_analysis_flags(sp):
    sp.add_argument("inputs", nargs="*", help="two input CSVs (date,close prices or single-column values)")
    sp.add_argument("--config", help="INI file with an [analysis] section; flags override it")
    sp.add_argument("--kind", choices=INPUT_KINDS, help="how to turn inputs into measures (default: auto)")
    sp.add_argument("--binomial", nargs=3, type=float, metavar=("PX", "PY", "LEVELS"), help="analyse a generated cascade pair")
    sp.add_argument("--bfbm", nargs=4, type=float, metavar=("HX", "HY", "RHO", "LENGTH"), help="analyse a generated bivariate fBm")
    sp.add_argument("--grid", help="moment grid LIMIT:SPACING (default 10:0.1)")
    sp.add_argument("--scales", help="'dyadic' or a comma-separated list of box sizes")
    sp.add_argument("--fit-range", help="inclusive scale window MIN:MAX (either side may be empty)")
    sp.add_argument("--method", choices=METHODS)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output directory")


def _config_from_args(args) -> AnalysisConfig:
    cfg = load_config(args.config) if args.config else AnalysisConfig()
    if args.inputs:
        cfg.inputs = tuple(args.inputs)
    if args.kind:
        cfg.kind = args.kind
    if args.seed is not None:
        cfg.seed = args.seed
    if args.binomial:
        px, py, levels = args.binomial
        cfg.generator, cfg.generator_params = "binomial", {"px": px, "py": py, "levels": int(levels)}
    if args.bfbm:
        hx, hy, rho, length = args.bfbm
        cfg.generator, cfg.generator_params = "bfbm", {"hx": hx, "hy": hy, "rho": rho, "length": int(length), "seed": cfg.seed}
    if args.grid:
        cfg.grid_limit, cfg.grid_spacing = parse_grid(args.grid)
    if args.scales:
        cfg.scales = args.scales
    if args.fit_range is not None:
        cfg.fit_range = parse_fit_range(args.fit_range)
    if args.method:
        cfg.method = args.method
    if args.out:
        cfg.out = args.out
    cfg.validate()
    return cfg


def _run_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "binomial":
        specs = {"x": BinomialSpec(args.px, args.levels), "y": BinomialSpec(args.py, args.levels)}
        series = {k: gen_binomial(s).values for k, s in specs.items()}
        used = {k: asdict(s) for k, s in specs.items()}
    else:
        spec = BfbmSpec(args.hx, args.hy, args.rho, args.length, args.seed)
        x, y = gen_bfbm(spec)
        series = {"x": x, "y": y}
        used = asdict(spec)
    for name, values in series.items():
        write_values_csv(out / f"{name}.csv", values)
    print(json.dumps({"generator": args.kind, "spec": used, "files": [str(out / "x.csv"), str(out / "y.csv")]}, indent=2))
    return 0


def _run_analyze(args) -> int:
    cfg = _config_from_args(args)
    result = cmd_analyze(cfg)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    return 0


def _run_windows(args) -> int:
    cfg = _config_from_args(args)
    report = cmd_windows(cfg, WindowSpec.parse(args.window, args.step))
    brief = {k: report[k] for k in ("n_windows", "window", "calendar_convention")}
    brief["starts"] = [w["start"] for w in report["windows"]]
    print(json.dumps(brief, indent=2))
    return 0


def _run_oracle(args) -> int:
    limit, spacing = parse_grid(args.grid)
    info = cmd_oracle(args.px, args.py, MomentGrid.symmetric(limit, spacing), args.out)
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def _run_compare(args) -> int:
    if not args.plane and (args.px is None or args.py is None):
        raise ParameterError("compare needs --px and --py, or --plane")
    tol = Tolerances(tau=args.tol_tau, alpha=args.tol_alpha, f=args.tol_f, line=args.tol_line)
    report = cmd_oracle_compare(args.bundle, args.px, args.py, tol, out=args.out, plane=args.plane)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointmf", description="Joint multifractal partition-function analysis")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic paired series as CSV")
    g.add_argument("kind", choices=("binomial", "bfbm"))
    g.add_argument("--px", type=float, default=0.3)
    g.add_argument("--py", type=float, default=0.4)
    g.add_argument("--levels", type=int, default=16)
    g.add_argument("--hx", type=float, default=0.1)
    g.add_argument("--hy", type=float, default=0.5)
    g.add_argument("--rho", type=float, default=0.5)
    g.add_argument("--length", type=int, default=2**16)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_run_generate)

    a = sub.add_parser("analyze", help="estimate tau, alpha and f surfaces for a pair")
    _add_analysis_flags(a)
    a.set_defaults(func=_run_analyze)

    w = sub.add_parser("windows", help="moving-window analysis of two price CSVs")
    _add_analysis_flags(w)
    w.add_argument("--window", default="10y", help="window length: '10y' (calendar years) or a sample count")
    w.add_argument("--step", default="1y", help="window step, same unit as --window")
    w.set_defaults(func=_run_windows)

    o = sub.add_parser("oracle", help="write exact binomial surfaces in the bundle schema")
    o.add_argument("--px", type=float, required=True)
    o.add_argument("--py", type=float, required=True)
    o.add_argument("--grid", default="10:0.1")
    o.add_argument("--out", required=True)
    o.set_defaults(func=_run_oracle)

    c = sub.add_parser("compare", help="diff a report bundle against the binomial oracle or the monofractal plane")
    c.add_argument("bundle")
    c.add_argument("--px", type=float)
    c.add_argument("--py", type=float)
    c.add_argument("--plane", action="store_true", help="compare with tau = p/2 + q/2 - 1")
    c.add_argument("--tol-tau", type=float, default=1e-6)
    c.add_argument("--tol-alpha", type=float, default=0.01)
    c.add_argument("--tol-f", type=float, default=0.01)
    c.add_argument("--tol-line", type=float, default=None, help="default: 5*h^2")
    c.add_argument("--out")
    c.set_defaults(func=_run_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except JointMFError as exc:
        print(f"jointmf: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyError as exc:
        print(f"jointmf: error: missing parameter {exc}", file=sys.stderr)
        return ParameterError.exit_code


if __name__ == "__main__":
    sys.exit(main())
