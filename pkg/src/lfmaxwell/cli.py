"""Command-line front end: ``lfmaxwell {solve,coeffs,convergence,mesh-info}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import coeffs as coeffs_mod
from .convergence import slopes, spatial_sweep, temporal_sweep
from .mesh import MeshError, generate_structured, load_mesh, mesh_stats
from .operators import SolverError
from .stepper import ConfigError, RunConfig, run

EXIT_CONFIG = 2
EXIT_SOLVER = 3

RUN_DEFAULTS = {"example": "1", "R": 6, "order": 1, "n": 8, "dt": None, "steps": None, "T": 1.0,
                "eps": 1.0, "mu": 1.0, "bc": "auto", "solver": "dense", "out": "out", "dump_fields": 0}


class UsageError(Exception):
    pass


def _even_int(text: str) -> int:
    try:
        R = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"R must be an even integer, got {text!r}") from None
    try:
        coeffs_mod._check_order(R)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return R


def _float_list(text: str) -> list[float]:
    try:
        return [float(eval_fraction(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def eval_fraction(text: str) -> float:
    """Parse '0.125' or '1/8'."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _run_flags(p: argparse.ArgumentParser) -> None:
    # defaults are None so that --config values can fill the gaps
    p.add_argument("--example", choices=["1", "2"])
    p.add_argument("--R", type=_even_int)
    p.add_argument("--order", type=int, choices=[1, 2])
    p.add_argument("--n", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dt", type=eval_fraction)
    g.add_argument("--steps", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--bc", choices=["auto", "homogeneous", "constrained"])
    p.add_argument("--solver", choices=["dense", "iterative"])
    p.add_argument("--out")
    p.add_argument("--config", help="JSON file with flag values (lower precedence than flags)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfmaxwell", description="High-order implicit leapfrog Maxwell solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run one simulation")
    _run_flags(ps)
    ps.add_argument("--dump-fields", type=int, dest="dump_fields", metavar="K",
                    help="write a VTK file every K steps")

    pc = sub.add_parser("coeffs", help="print the gamma_s coefficient table")
    pc.add_argument("--R", type=_even_int, required=True)
    pc.add_argument("--format", choices=["text", "json"], default="text")

    pv = sub.add_parser("convergence", help="spatial or temporal convergence sweep")
    pv.add_argument("--mode", choices=["spatial", "temporal"], required=True)
    _run_flags(pv)
    pv.add_argument("--ns", type=_int_list, help="mesh sweep for spatial mode, e.g. 4,8,16,32")
    pv.add_argument("--dts", type=_float_list, help="time-step sweep for temporal mode, e.g. 1/8,1/16,1/32")

    pm = sub.add_parser("mesh-info", help="mesh statistics")
    src = pm.add_mutually_exclusive_group(required=True)
    src.add_argument("--n", type=int)
    src.add_argument("--mesh", help="Triangle .node/.ele stem")
    pm.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def resolve_flags(args: argparse.Namespace) -> dict:
    merged = dict(RUN_DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(RUN_DEFAULTS) - {"ns", "dts", "mode"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in list(RUN_DEFAULTS) + ["ns", "dts"]:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if getattr(args, "dt", None) is not None:
        merged["steps"] = None
    elif getattr(args, "steps", None) is not None:
        merged["dt"] = None
    return merged


def to_run_config(flags: dict) -> RunConfig:
    ex = str(flags["example"])
    example = {"1": "example1", "2": "example2"}.get(ex, ex)
    return RunConfig(example=example, R=int(flags["R"]), r=int(flags["order"]), n=int(flags["n"]),
                     dt=flags["dt"], steps=flags["steps"], T=float(flags["T"]), eps=float(flags["eps"]),
                     mu=float(flags["mu"]), bc=flags["bc"], solver=flags["solver"], out=flags["out"],
                     dump_fields=int(flags.get("dump_fields") or 0))


def cmd_solve(args) -> int:
    cfg = to_run_config(resolve_flags(args)).resolve()
    t0 = time.perf_counter()
    diag = run(cfg)
    e = diag.errors
    print(f"{cfg.example} R={cfg.R} r={cfg.r} n={cfg.n} dt={cfg.dt:g} steps={cfg.steps} bc={diag.mode}: "
          f"err_p={e['err_p']:.3e} err_E={e['err_E']:.3e} err_H={e['err_H']:.3e} "
          f"max_drift={diag.max_rel_drift:.2e} wall={time.perf_counter() - t0:.2f}s -> {cfg.out}")
    return 0


def cmd_coeffs(args) -> int:
    table = coeffs_mod.coefficient_table(args.R)
    print(coeffs_mod.render_json(table) if args.format == "json" else coeffs_mod.render_text(table))
    return 0


def cmd_convergence(args) -> int:
    flags = resolve_flags(args)
    mode = args.mode
    sweep = flags.get("ns") if mode == "spatial" else flags.get("dts")
    if not sweep or len(sweep) < 3:
        raise UsageError(f"{mode} mode needs at least 3 sweep points ({'--ns' if mode == 'spatial' else '--dts'})")
    if mode == "spatial":
        base = to_run_config({**flags, "dt": flags["dt"] or 1e-3, "steps": None})
    else:
        base = to_run_config({**flags, "dt": min(sweep), "steps": None})
    for dt in ([base.dt] if mode == "spatial" else sweep):
        RunConfig(**{**asdict(base), "dt": dt, "steps": None}).resolve()
    if mode == "spatial":
        for n in sweep:
            RunConfig(**{**asdict(base), "n": n}).resolve()
        pts = spatial_sweep(base.example, base.R, base.r, sweep, base.dt, base.T, base.bc, base.solver)
    else:
        pts = temporal_sweep(base.example, base.R, base.r, base.n, sweep, base.T, base.bc)
    out = Path(base.out)
    out.mkdir(parents=True, exist_ok=True)
    echo = {**asdict(base), "mode": mode, "sweep": sweep}
    if mode == "temporal":
        echo.pop("dt")
        echo["reference_dt"] = min(sweep) / 32
    with open(out / "convergence.csv", "w", newline="") as f:
        f.write(f"# config: {json.dumps(echo, sort_keys=True)}\n")
        w = csv.writer(f)
        w.writerow(["mode", "R", "order", "n", "dt", "err_p", "err_E", "err_H", "err_total"])
        for pt in pts:
            w.writerow(pt.row())
    result = {**slopes(pts, mode), "config": echo}
    (out / "slopes.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    fs = result["field_slopes"]
    print(f"{mode} slopes: p={fs['p']:.3f} E={fs['E']:.3f} H={fs['H']:.3f} -> {out}")
    return 0


def cmd_mesh_info(args) -> int:
    mesh = generate_structured(args.n) if args.n is not None else load_mesh(args.mesh)
    stats = mesh_stats(mesh)
    if args.format == "json":
        print(json.dumps(stats, indent=2))
    else:
        for k, v in stats.items():
            print(f"{k:>22}: {v:.6g}" if isinstance(v, float) else f"{k:>22}: {v}")
    return 0


COMMANDS = {"solve": cmd_solve, "coeffs": cmd_coeffs, "convergence": cmd_convergence, "mesh-info": cmd_mesh_info}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, MeshError, ValueError) as exc:
        print(f"lfmaxwell {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"lfmaxwell {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
