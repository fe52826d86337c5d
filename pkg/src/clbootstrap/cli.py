"""Command-line front end: ``clbootstrap {gen,analyze,run,sweep,replay}``.

Exit codes: 0 success, 2 usage, 3 invalid input data, 4 internal invariant
violation.  Every command that writes files also writes a manifest
(``<output>.manifest.json``) recording the argv needed to redo the run.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    NoHeavyVertices,
    NotSubcritical,
    SweepConfig,
    estimate_transition,
    run_sweep,
)
from .formats import dumps, format_weights, read_weights, sha256_file, write_json
from .graph import sample_graph, write_edge_list
from .percolation import InfectionParams, run_bootstrap, run_restricted, sample_initial
from .rng import GRAPH, SEEDS, stream
from .weights import (
    WeightError,
    breeding_plan,
    check_subcritical_tail,
    check_supercritical_tail,
    gen_example_sequence,
    gen_power_law,
    gen_uniform,
    heavy_bound,
    layer_plan,
    nucleus_bound_dense,
    nucleus_bound_sparse,
    threshold_report,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4
THREADS_ENV = "CLBOOTSTRAP_THREADS"


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


def _manifest(args, outputs: list[str], inputs: list[str], config: dict) -> dict:
    return {
        "command": args.command,
        "argv": list(args.argv),
        "cwd": os.getcwd(),
        "config": config,
        "base_seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "input_digests": {p: sha256_file(p) for p in inputs},
        "outputs": outputs,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _write_manifest(path: Path, args, outputs, inputs, config) -> None:
    write_json(Path(str(path) + ".manifest.json"), _manifest(args, outputs, inputs, config))


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args) -> None:
    if args.model == "powerlaw":
        if args.n is None or args.n < 1:
            raise UsageError("--n must be a positive integer")
        if args.a is None or not 0 < args.a < 1:
            raise UsageError("--a must lie in (0, 1)")
        ws = gen_power_law(args.n, args.a, args.c)
    elif args.model in ("example-a", "example-b"):
        if args.W is None:
            raise UsageError("--W is required for the example models")
        ws = gen_example_sequence(args.model[-1].upper(), args.W)
    elif args.model == "uniform":
        if args.n is None or args.n < 1:
            raise UsageError("--n must be a positive integer")
        ws = gen_uniform(args.n, args.w)
    else:
        if args.input is None:
            raise UsageError("--input is required for --model file")
        ws = read_weights(args.input)
    _emit(format_weights(ws), args.out)
    if args.out is not None:
        config = {k: getattr(args, k) for k in ("model", "n", "a", "c", "W", "w", "input")}
        _write_manifest(Path(args.out), args, [args.out], [args.input] if args.input else [], config)


def analyze(ws, args) -> dict:
    rep = threshold_report(ws, args.r)
    out = {
        "n": ws.n,
        "total_weight": ws.total_weight,
        "lambda": ws.lam,
        "threshold": rep.to_dict(),
        "psi_growth_claim": {
            "holds": rep.psi + 1 <= 2.0 / 3.0 * math.sqrt(ws.total_weight),
            "asserted": ws.n >= 10**4,
        },
    }
    if args.C is not None and args.C1 is not None:
        chk = check_supercritical_tail(ws, args.C, args.C1)
        out["supercritical_tail"] = {"holds": chk.holds, "witness": chk.witness}
    if args.c is not None and args.c1 is not None and args.h is not None:
        chk = check_subcritical_tail(ws, args.c, args.c1, args.h, override=args.override)
        out["subcritical_tail"] = {"holds": chk.holds, "witness": chk.witness}
    if args.p0 is not None:
        plan = breeding_plan(ws, args.r, args.p0)
        out["breeding_plan"] = plan.to_dict()
        if plan.mu > 1:
            out["nucleus_sparse"] = nucleus_bound_sparse(ws, args.r, plan.mu)
        if rep.p_dense is not None and args.p0 / rep.p_dense > 1:
            value, label = nucleus_bound_dense(ws, args.r, args.p0 / rep.p_dense)
            out["nucleus_dense"] = {"value": value, "case": label}
    if args.C is not None and args.C1 is not None and args.alpha is not None:
        psi_k = args.psi_K if args.psi_K is not None else heavy_bound(ws, args.r)
        try:
            out["layer_plan"] = layer_plan(
                ws, args.r, args.C, args.C1, args.alpha, psi_k, override=args.override
            ).to_dict()
        except ArithmeticError as exc:
            out["layer_plan"] = {"error": str(exc), "witness": getattr(exc, "witness", None)}
    return out


def cmd_analyze(args) -> None:
    ws = read_weights(args.weights)
    _emit(dumps(analyze(ws, args)), args.out)
    if args.out is not None:
        _write_manifest(Path(args.out), args, [args.out], [args.weights], vars_config(args))


def vars_config(args) -> dict:
    skip = {"func", "argv", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def cmd_run(args) -> None:
    ws = read_weights(args.weights)
    g = sample_graph(ws, stream(args.seed, GRAPH))
    doc: dict = {"seed": args.seed, "r": args.r, "p0": args.p0, "edges": g.m}
    if args.restricted:
        if args.p0 <= 0:
            raise UsageError("--restricted needs --p0 > 0 to build the breeding ground")
        plan = breeding_plan(ws, args.r, args.p0)
        cap = args.cap if args.cap is not None else plan.phi0
        params = InfectionParams(args.r, args.p0, cap, args.floor)
        a0 = sample_initial(ws, params, stream(args.seed, SEEDS))
        tr = run_restricted(g, a0, plan.ground, args.r, count_all_infected=args.count_all)
        full = run_bootstrap(g, a0, args.r)
        contained = all(
            np.all(full.infection_round[tr.infected_by(t)] >= 0)
            and np.all(full.infection_round[tr.infected_by(t)] <= t)
            for t in range(tr.steps_taken + 1)
        )
        if not contained and not args.count_all:
            raise InvariantViolation("restricted process escaped the unrestricted one")
        doc["breeding_plan"] = plan.to_dict()
        doc["cap"] = cap
        doc["containment_holds"] = bool(contained)
    else:
        params = InfectionParams(args.r, args.p0, args.cap, args.floor)
        a0 = sample_initial(ws, params, stream(args.seed, SEEDS))
        tr = run_bootstrap(g, a0, args.r)
    doc["trace"] = tr.to_dict(include_final_set=args.final_set)
    _emit(dumps(doc), args.out)
    outputs = [args.out] if args.out else []
    if args.edges:
        write_edge_list(g, args.edges)
        outputs.append(args.edges)
    if args.out is not None:
        _write_manifest(Path(args.out), args, outputs, [args.weights], vars_config(args))


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def cmd_sweep(args) -> None:
    try:
        raw = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise WeightError(f"config is not valid JSON: {exc}") from None
    cfg = SweepConfig.from_dict(raw)
    inputs = [args.config]
    if cfg.generator.get("model") == "file":
        inputs.append(cfg.generator["path"])
    res = run_sweep(cfg, workers=_threads(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(res.to_csv())
    write_json(out / "summary.json", res.to_dict())
    (out / "plot_data.txt").write_text(res.plot_data())
    outputs = [str(out / f) for f in ("sweep.csv", "summary.json", "plot_data.txt")]
    if not args.no_plot:
        from .plotting import plot_sweep

        plot_sweep(res, out / "outbreak.png")
        outputs.append(str(out / "outbreak.png"))
    args.seed = cfg.base_seed
    _write_manifest(out / "sweep", args, outputs, inputs, cfg.to_dict())
    est = estimate_transition(res)
    sys.stderr.write(
        f"a_c scale {res.a_c_scale:.6g}; transition estimate "
        f"{'none' if est is None else format(est, '.6g')}\n"
    )


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    here = os.getcwd()
    # relative paths in argv resolve against the original working directory
    if manifest.get("cwd") and Path(manifest["cwd"]).is_dir():
        os.chdir(manifest["cwd"])
    try:
        for path, digest in manifest.get("input_digests", {}).items():
            if sha256_file(path) != digest:
                raise WeightError(f"input {path} changed since the manifest was written")
        return main(manifest["argv"])
    finally:
        os.chdir(here)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clbootstrap", description="Bootstrap percolation on Chung-Lu random graphs."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a weight file")
    p.add_argument("--model", required=True, choices=["powerlaw", "example-a", "example-b", "uniform", "file"])
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float, help="power-law exponent parameter in (0,1)")
    p.add_argument("--c", type=float, default=1.0, help="power-law scale")
    p.add_argument("--W", type=float, help="target total weight for the example models")
    p.add_argument("--w", type=float, default=1.0, help="weight for --model uniform")
    p.add_argument("--input", help="weight file for --model file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="threshold quantities and regime checks")
    p.add_argument("--weights", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--C", type=float)
    p.add_argument("--C1", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--psi-K", dest="psi_K", type=float, help="nucleus bound for the layer plan (default: heavy bound)")
    p.add_argument("--c", type=float)
    p.add_argument("--c1", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--p0", type=float, help="initial rate for the breeding-ground plan")
    p.add_argument("--override", action="store_true", help="allow constants outside the theorem ranges")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="one graph, one seed set, one trace")
    p.add_argument("--weights", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restricted", action="store_true", help="breeding-ground process on the computed ground")
    p.add_argument("--count-all", action="store_true", help="restricted process counts every infected neighbour")
    p.add_argument("--cap", type=float, help="only vertices lighter than this are seeded")
    p.add_argument("--floor", type=float, help="vertices at least this heavy are always seeded")
    p.add_argument("--final-set", action="store_true", help="include the sorted final set")
    p.add_argument("--edges", help="also write the sampled edge list here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over p0 multipliers")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (WeightError, NotSubcritical, NoHeavyVertices, OSError, KeyError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except (InvariantViolation, AssertionError) as exc:
        sys.stderr.write(f"invariant violated: {exc}\n")
        return EXIT_INVARIANT
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
