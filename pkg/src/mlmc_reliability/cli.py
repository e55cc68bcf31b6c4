"""Command-line interface.

Every command writes its outputs atomically plus a manifest
``<out-stem>.manifest.json`` recording the arguments and the SHA-256 of each
deterministic output. ``replay`` re-runs a manifest and checks the hashes.
Wall-clock measurements go to ``.timing`` sidecars, which are not hashed.

Exit codes: 0 success, 2 usage, 3 input format, 4 capacity (cut-set cap),
5 internal contract violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .diagnostics import fit_rates, speedup_curve
from .distributions import Exponential, ParameterError, make_rng
from .estimators import McConfig, run_levels, run_mc, run_mlmc
from .generator import GrowthConfig, grow
from .io import (
    FormatError,
    read_json,
    read_partition,
    read_system,
    sha256_file,
    write_csv,
    write_json,
    write_partition,
    write_system,
)
from .levels import PilotData, build_partition, pilot_scores
from .simulator import ContractError, RepairableProcess, sample_lifetime
from .system import DEFAULT_CUT_CAP, CapacityError, System, enumerate_min_cutsets

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_CAPACITY = 4
EXIT_CONTRACT = 5

TAG_PILOT = 0
TAG_SIMULATE = 4

DEFAULT_EPS_GRID = "2^-2,2^-1,1,2,4,8,16,32"


class UsageError(Exception):
    pass


def parse_eps(text: str) -> float:
    """A positive float, also accepting ``2^-k`` shorthand."""
    m = re.fullmatch(r"\s*2\^(-?\d+)\s*", text)
    try:
        val = 2.0 ** int(m.group(1)) if m else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def _eps_list(text: str) -> list[float]:
    return [parse_eps(t) for t in text.split(",") if t.strip()]


def _pos_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mlmc-reliability", description="Multilevel Monte Carlo system lifetime estimation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help: str):
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--workers", type=_pos_int, default=1, help="worker processes (default 1)")
        sp.add_argument("--out", required=True, help=out_help)

    def system_arg(sp):
        sp.add_argument("system", help="system JSON file")
        sp.add_argument("--repair-rate", type=_nonneg_float, default=None,
                        help="give every component Exponential(rate) repair")
        sp.add_argument("--no-repair", action="store_true", help="ignore repair distributions")
        sp.add_argument("--cut-cap", type=_pos_int, default=DEFAULT_CUT_CAP)

    def level_args(sp):
        sp.add_argument("--partition", help="partition JSON from select-levels")
        sp.add_argument("--pilot", type=_pos_int, default=100, help="pilot size N' (default 100)")
        sp.add_argument("--levels", type=int, default=None, help="maximal level L (default floor(log2 #C))")

    g = sub.add_parser("generate", help="grow a random system")
    common(g, "system JSON to write")
    g.add_argument("--n", type=_pos_int, required=True, help="number of components")
    g.add_argument("--shape", type=float, default=1.0)
    g.add_argument("--scale-min", type=float, default=2.0)
    g.add_argument("--scale-max", type=float, default=10.0)
    g.add_argument("--repair-rate", type=_nonneg_float, default=None)
    g.add_argument("--p-series", type=float, default=1 / 3)
    g.add_argument("--p-parallel", type=float, default=1 / 3)
    g.add_argument("--p-bridge", type=float, default=1 / 3)
    g.add_argument("--cut-cap", type=_pos_int, default=DEFAULT_CUT_CAP)
    g.add_argument("--no-cutsets", action="store_true", help="do not enumerate cut sets")

    c = sub.add_parser("cutsets", help="enumerate minimal cut sets of a system file")
    common(c, "system JSON to write, with cut sets")
    system_arg(c)
    c.add_argument("--method", choices=("separators", "dualization"), default="separators")

    s = sub.add_parser("select-levels", help="pilot simulation and nested level partition")
    common(s, "partition JSON to write")
    system_arg(s)
    s.add_argument("--pilot", type=_pos_int, default=100)
    s.add_argument("--levels", type=int, default=None)

    m = sub.add_parser("mc", help="standard Monte Carlo estimate")
    common(m, "result JSON to write")
    system_arg(m)
    m.add_argument("--eps", type=parse_eps, required=True, help="target accuracy; presets 2^-4 and 2^-7, any positive value accepted")
    m.add_argument("--z", type=float, default=1.96)
    m.add_argument("--pilot", type=_pos_int, default=100, help="variance pilot size (default 100)")

    ml = sub.add_parser("mlmc", help="adaptive multilevel Monte Carlo estimate")
    common(ml, "result JSON to write")
    system_arg(ml)
    level_args(ml)
    ml.add_argument("--eps", type=parse_eps, required=True,
                    help="target accuracy; presets 2^-4 and 2^-7, any positive value accepted")
    ml.add_argument("--full", action="store_true", help="use every level (full telescope)")
    ml.add_argument("--cost", choices=("ops", "seconds"), default="ops")
    ml.add_argument("--n-init", type=_pos_int, default=100)
    ml.add_argument("--sparse-guard", action="store_true",
                    help="treat all-zero level differences as unresolved (variance guess V_(l-1)/2)")

    si = sub.add_parser("simulate", help="raw lifetime samples as CSV")
    common(si, "CSV to write")
    system_arg(si)
    si.add_argument("--n", type=_pos_int, default=1000, help="number of samples")
    si.add_argument("--horizon", type=float, default=None)

    d = sub.add_parser("diagnose", help="fixed-size level run and rate fits")
    common(d, "level CSV to write")
    system_arg(d)
    level_args(d)
    d.add_argument("--n", type=_pos_int, default=1000, help="samples per level")
    d.add_argument("--gamma-cost", choices=("weights", "n_cuts", "ops"), default=None,
                   help="cost measure for gamma (default: weights without repair, ops with)")

    sp = sub.add_parser("speedup", help="MC/MLMC speedup over a grid of eps")
    common(sp, "CSV to write")
    system_arg(sp)
    level_args(sp)
    sp.add_argument("--n", type=_pos_int, default=1000, help="samples per level")
    sp.add_argument("--eps-grid", type=_eps_list, default=_eps_list(DEFAULT_EPS_GRID))

    r = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    r.add_argument("manifest")
    r.add_argument("--out", default=None, help="write to this path instead of the recorded one")
    return p


# --- helpers ---------------------------------------------------------------------


def _stem(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix else p


def _sidecar(out: str, tag: str) -> Path:
    s = _stem(out)
    return s.with_name(s.name + tag)


def _load_system(args) -> System:
    sys_ = read_system(args.system)
    if args.no_repair and args.repair_rate is not None:
        raise UsageError("--no-repair and --repair-rate are mutually exclusive")
    if args.repair_rate is not None:
        rep = Exponential(args.repair_rate)
        sys_.components = [dataclasses.replace(c, repair=rep) for c in sys_.components]
    elif args.no_repair:
        sys_.components = [dataclasses.replace(c, repair=None) for c in sys_.components]
    if sys_.cutsets is None:
        sys_.cutsets = enumerate_min_cutsets(sys_.network, cap=args.cut_cap)
    return sys_


def _partition(args, sys_: System):
    """Partition from ``--partition`` or a fresh pilot; returns (partition, pilot or None)."""
    if args.partition:
        part = read_partition(args.partition)
        if part.n_cuts != len(sys_.cutsets):
            raise FormatError("levels", f"partition covers {part.n_cuts} cuts, system has {len(sys_.cutsets)}")
        # carry the recorded pilot cost so totals stay comparable with a fresh pilot
        cost = read_json(args.partition).get("pilot_cost", 0.0)
        if not isinstance(cost, (int, float)) or isinstance(cost, bool) or cost < 0:
            raise FormatError("pilot_cost", f"expected a non-negative number, got {cost!r}")
        m = part.n_cuts
        return part, PilotData(np.empty((0, m)), np.zeros(m), cost_ops=float(cost))
    if args.levels is not None and args.levels < 0:
        raise UsageError("--levels must be >= 0")
    pilot = pilot_scores(sys_, args.pilot, make_rng(args.seed, TAG_PILOT))
    return build_partition(pilot, args.levels), pilot


def _level_rows(levels):
    return [(s.level, s.n_cuts, s.N, s.mean, s.var, s.ops, s.kappa_ops) for s in levels]


LEVEL_HEADER = ("level", "n_cuts", "N", "mean", "var", "cost", "kappa_ops")


# --- commands --------------------------------------------------------------------


def cmd_generate(args) -> dict:
    try:
        cfg = GrowthConfig(
            args.n, args.p_series, args.p_parallel, args.p_bridge, shape=args.shape,
            scale_lo=args.scale_min, scale_hi=args.scale_max, repair_rate=args.repair_rate,
            seed=args.seed, cut_cap=args.cut_cap,
        )
    except (ValueError, ParameterError) as exc:
        raise UsageError(str(exc)) from None
    write_system(args.out, grow(cfg, cutsets=not args.no_cutsets))
    return {"main": args.out}


def cmd_cutsets(args) -> dict:
    s = read_system(args.system)
    s.cutsets = enumerate_min_cutsets(s.network, cap=args.cut_cap, method=args.method)
    write_system(args.out, s)
    return {"main": args.out}


def cmd_select_levels(args) -> dict:
    s = _load_system(args)
    if args.levels is not None and args.levels < 0:
        raise UsageError("--levels must be >= 0")
    pilot = pilot_scores(s, args.pilot, make_rng(args.seed, TAG_PILOT))
    part = build_partition(pilot, args.levels)
    write_partition(args.out, part, {"n_pilot": pilot.n_pilot, "pilot_cost": pilot.cost_ops,
                                     "repairable": pilot.repairable})
    timing = _sidecar(args.out, ".timing.json")
    write_json(timing, {"pilot_seconds": pilot.seconds})
    return {"main": args.out, "timing": str(timing)}


def _write_result(args, res) -> dict:
    levels_csv = _sidecar(args.out, ".levels.csv")
    timing = _sidecar(args.out, ".timing.json")
    write_json(args.out, res.to_dict())
    write_csv(levels_csv, LEVEL_HEADER, _level_rows(res.levels))
    write_json(timing, {
        "wall_seconds": res.wall_seconds,
        "pilot_seconds": res.pilot_seconds,
        "levels": [{"level": s.level, "seconds": s.seconds, "kappa_seconds": s.kappa_seconds,
                    "sample_seconds": s.sample_seconds or None}
                   for s in res.levels],
    })
    return {"main": args.out, "levels_csv": str(levels_csv), "timing": str(timing)}


def cmd_mc(args) -> dict:
    s = _load_system(args)
    if args.pilot < 2:
        raise UsageError("--pilot must be >= 2 for mc")
    res = run_mc(s, McConfig(args.eps, args.z, args.pilot), seed=args.seed, workers=args.workers)
    return _write_result(args, res)


def cmd_mlmc(args) -> dict:
    s = _load_system(args)
    part, pilot = _partition(args, s)
    if args.n_init < 2:
        raise UsageError("--n-init must be >= 2")
    res = run_mlmc(s, part, args.eps, seed=args.seed, pilot=pilot, workers=args.workers,
                   n_init=args.n_init, force_all_levels=args.full, cost=args.cost,
                   sparse_guard=args.sparse_guard)
    return _write_result(args, res)


def cmd_simulate(args) -> dict:
    s = _load_system(args)
    rng = make_rng(args.seed, TAG_SIMULATE)
    rows = []
    if s.repairable:
        proc = RepairableProcess(s, s.cutsets)
        for i in range(args.n):
            tr = proc.run(rng, horizon=args.horizon)
            rows.append((i, tr.t_fine, tr.n_repairs))
    else:
        for i in range(args.n):
            rows.append((i, float(sample_lifetime(s, s.cutsets, rng)), 0))
    write_csv(args.out, ("sample_index", "lifetime", "n_repairs"), rows)
    return {"main": args.out}


def cmd_diagnose(args) -> dict:
    s = _load_system(args)
    part, _ = _partition(args, s)
    levels = run_levels(s, part, args.n, seed=args.seed, workers=args.workers)
    cost = "ops" if s.repairable else "weights"
    write_csv(args.out, ("level", "mean", "var", "cost_proxy", "kappa_ops"),
              [(x.level, x.mean, x.var, x.ops / x.N, x.kappa_ops) for x in levels])
    rates_path = _sidecar(args.out, ".rates.json")
    timing = _sidecar(args.out, ".timing.csv")
    out = {"main": args.out, "rates": str(rates_path), "timing": str(timing)}
    report = None
    if len(levels) >= 3:
        report = fit_rates(levels, args.gamma_cost or cost).to_dict()
        report["gamma_n_cuts"] = fit_rates(levels, "n_cuts").gamma
    write_json(rates_path, {"rates": report, "mc_var": levels[-1].fine_var,
                            "mean_lifetime": levels[-1].fine_mean})
    write_csv(timing, ("level", "kappa_seconds"), [(x.level, x.kappa_seconds) for x in levels])
    return out


def cmd_speedup(args) -> dict:
    s = _load_system(args)
    part, _ = _partition(args, s)
    levels = run_levels(s, part, args.n, seed=args.seed, workers=args.workers)
    mc_var = levels[-1].fine_var
    cost = "ops" if s.repairable else "n_cuts"
    curve = speedup_curve(mc_var, levels, args.eps_grid, cost)
    write_csv(args.out, ("eps", "speedup", "L_eps"), curve)
    timing = _sidecar(args.out, ".timing.csv")
    write_csv(timing, ("eps", "speedup_seconds", "L_eps"), speedup_curve(mc_var, levels, args.eps_grid, "seconds"))
    return {"main": args.out, "timing": str(timing)}


COMMANDS = {
    "generate": cmd_generate,
    "cutsets": cmd_cutsets,
    "select-levels": cmd_select_levels,
    "mc": cmd_mc,
    "mlmc": cmd_mlmc,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
    "speedup": cmd_speedup,
}


def _manifest(argv: Sequence[str], args, outputs: dict) -> dict:
    fields = {k: v for k, v in vars(args).items() if k not in ("command",)}
    inputs = {}
    for key in ("system", "partition"):
        path = fields.get(key)
        if path:
            inputs[key] = {"path": path, "sha256": sha256_file(path)}
    return {
        "version": __version__,
        "subcommand": args.command,
        "argv": list(argv),
        "seed": fields.get("seed"),
        "eps": fields.get("eps"),
        "workers": fields.get("workers"),
        "partition": fields.get("partition"),
        "options": fields,
        "inputs": inputs,
        "outputs": {role: {"path": p, "sha256": sha256_file(p)} for role, p in outputs.items()
                    if role != "timing"},
        "timing_outputs": [outputs["timing"]] if "timing" in outputs else [],
    }


def _replay(path: str, out: Optional[str]) -> int:
    man = read_json(path)
    try:
        argv = list(man["argv"])
        recorded = man["outputs"]
    except (KeyError, TypeError):
        raise FormatError("argv", "manifest lacks argv/outputs") from None
    argv = _set_flag(argv, "--workers", "1")
    if out is not None:
        argv = _set_flag(argv, "--out", out)
    args, outputs = _run(argv)
    bad = []
    for role, rec in recorded.items():
        new = outputs.get(role)
        if new is None or sha256_file(new) != rec["sha256"]:
            bad.append(role)
    if bad:
        print(f"replay mismatch in: {', '.join(bad)}", file=sys.stderr)
        return EXIT_CONTRACT
    print(f"replay identical: {', '.join(sorted(recorded))}")
    return EXIT_OK


def _set_flag(argv: list[str], flag: str, value: str) -> list[str]:
    out = []
    i = 0
    found = False
    while i < len(argv):
        a = argv[i]
        if a == flag:
            out += [flag, value]
            i += 2
            found = True
            continue
        if a.startswith(flag + "="):
            out.append(f"{flag}={value}")
            i += 1
            found = True
            continue
        out.append(a)
        i += 1
    if not found:
        out += [flag, value]
    return out


def _run(argv: Sequence[str]):
    args = build_parser().parse_args(list(argv))
    if args.command == "replay":
        raise UsageError("a manifest cannot replay another replay")
    outputs = COMMANDS[args.command](args)
    write_json(_sidecar(args.out, ".manifest.json"), _manifest(argv, args, outputs))
    return args, outputs


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "replay":
            args = build_parser().parse_args(argv)
            return _replay(args.manifest, args.out)
        _run(argv)
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"input format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    raise SystemExit(main())
