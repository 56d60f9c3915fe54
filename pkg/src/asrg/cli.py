"""Batch entry point: ``python3 -m asrg <command> ...``.

Exit codes: 0 success, 1 verification failure or solver divergence,
2 input, output or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import instance as inst
from .arith import PrecisionError
from .eqmcost import SolveResult, solve_players_exp
from .graphflow import InvariantError
from .typeset import SolverFailure, enumerate_typesets, solve_edges_exp
from .verify import PreconditionError, best_response, check

__all__ = ["RunConfig", "main", "run"]

BENCH_HEADER = ["n", "m", "epsilon", "algorithm", "probes", "wall_ms", "max_gap"]
AGREEMENT_TOL = 1e-4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    algorithm: str = "players-exp"
    epsilon: float | None = None
    precision: str = "standard"
    seed: int = 0
    paths: dict | None = None
    options: dict | None = None


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [_positive_float(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asrg", description="Equilibria of splittable routing games on parallel links.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute an epsilon-equilibrium flow")
    s.add_argument("--instance", required=True)
    s.add_argument("--out", required=True, help="flow file to write")
    s.add_argument("--report", help="JSON run report (default: <out>.report.json)")
    s.add_argument("--algorithm", choices=["players-exp", "edges-exp", "both"], default="players-exp")
    s.add_argument("--epsilon", type=_positive_float, required=True)
    s.add_argument("--precision", choices=["standard", "high"], default="standard")

    v = sub.add_parser("verify", help="certify a flow file")
    v.add_argument("--instance", required=True)
    v.add_argument("--flow", required=True)
    v.add_argument("--epsilon", type=_positive_float, help="default: the value stored in the flow file")

    b = sub.add_parser("best-response", help="one player's optimal deviation")
    b.add_argument("--instance", required=True)
    b.add_argument("--flow", required=True)
    b.add_argument("--player", type=int, required=True, help="0-based player index")
    b.add_argument("--out", help="write the deviated profile as a flow file")

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--family", choices=inst.FAMILIES, default="affine")
    g.add_argument("--out", required=True)

    t = sub.add_parser("typesets", help="list player partitions")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--m", type=int, required=True)
    t.add_argument("--count-only", action="store_true")

    c = sub.add_parser("bench", help="probe counts and timings as CSV")
    c.add_argument("--seed", type=int, default=0, help="first seed")
    c.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    c.add_argument("--n-values", type=_int_list, default=[1, 2, 3, 4])
    c.add_argument("--m", type=int, default=2)
    c.add_argument("--epsilons", type=_float_list, default=[1e-3, 1e-4, 1e-5])
    c.add_argument("--family", choices=inst.FAMILIES, default="affine")
    c.add_argument("--algorithm", choices=["players-exp", "edges-exp", "both"], default="both")
    c.add_argument("--precision", choices=["standard", "high"], default="standard")
    c.add_argument("--out", help="CSV path (default: standard output)")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    paths = {k: getattr(ns, k) for k in ("instance", "flow", "out", "report") if getattr(ns, k, None)}
    skip = {"command", "algorithm", "epsilon", "precision", "seed", *paths}
    options = {k: val for k, val in vars(ns).items() if k not in skip}
    cfg = RunConfig(
        command=ns.command,
        algorithm=getattr(ns, "algorithm", "players-exp"),
        epsilon=getattr(ns, "epsilon", None),
        precision=getattr(ns, "precision", "standard"),
        seed=getattr(ns, "seed", 0),
        paths=paths,
        options=options,
    )
    for key in ("instance", "flow"):
        if key in paths and not Path(paths[key]).is_file():
            raise ConfigError(f"{key} file not found: {paths[key]}")
    return cfg


def _solve(instance, algorithm, epsilon, precision) -> SolveResult:
    if algorithm == "players-exp":
        return solve_players_exp(instance, epsilon, precision)
    return solve_edges_exp(instance, epsilon, precision)


def _report(res: SolveResult) -> dict:
    out = {
        "algorithm": res.algorithm,
        "epsilon_certified": res.epsilon_certified,
        "max_gap": res.report.max_gap,
        "delta_used": res.delta_used,
        "psi": res.psi,
        "lambda": res.lam,
        "probes": res.probes,
        "iterations": [int(x) for x in res.iterations],
        "wall_time_s": res.wall_time,
        "marginals": [float(x) for x in res.marginals],
        "edge_totals": [float(x) for x in res.flow.edge_totals],
    }
    if "typeset" in res.extra:
        out["typeset"] = str(res.extra["typeset"])
        out["typesets_tried"] = len(res.extra["attempts"])
    return out


def _cmd_solve(cfg: RunConfig, out) -> int:
    instance = inst.load(cfg.paths["instance"])
    algos = ["players-exp", "edges-exp"] if cfg.algorithm == "both" else [cfg.algorithm]
    results = {a: _solve(instance, a, cfg.epsilon, cfg.precision) for a in algos}
    report = {a: _report(r) for a, r in results.items()}
    status = 0
    if cfg.algorithm == "both":
        diff = float(np.max(np.abs(results["players-exp"].flow.edge_totals - results["edges-exp"].flow.edge_totals)))
        report["edge_total_difference"] = diff
        if diff > AGREEMENT_TOL:
            print(f"error: algorithms disagree on edge totals by {diff:.3e} > {AGREEMENT_TOL:.0e}", file=sys.stderr)
            status = 1
    first = results[algos[0]]
    inst.save_flow(first.flow, cfg.paths["out"], cfg.epsilon, first.algorithm)
    report_path = cfg.paths.get("report") or cfg.paths["out"] + ".report.json"
    Path(report_path).write_text(json.dumps(report if cfg.algorithm == "both" else report[algos[0]], indent=2) + "\n")
    print(f"wrote {cfg.paths['out']} and {report_path}; max gap {first.report.max_gap:.3e}", file=out)
    return status


def _cmd_verify(cfg: RunConfig, out) -> int:
    instance = inst.load(cfg.paths["instance"])
    ff = inst.load_flow(cfg.paths["flow"])
    eps = cfg.epsilon if cfg.epsilon is not None else ff.epsilon
    try:
        rep = check(instance, ff.flow, eps)
    except PreconditionError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    print(rep.summary(), file=out)
    if not rep.passed:
        worst = int(np.argmax(rep.per_player_gap))
        print(f"verification failed: player {worst} gap {rep.per_player_gap[worst]:.6e} > {eps:.6e}", file=sys.stderr)
        return 1
    return 0


def _cmd_best_response(cfg: RunConfig, out) -> int:
    instance = inst.load(cfg.paths["instance"])
    ff = inst.load_flow(cfg.paths["flow"])
    k = cfg.options["player"]
    if not 0 <= k < instance.n:
        raise ConfigError(f"--player must be in [0, {instance.n})")
    profile, delta_cost = best_response(instance, ff.flow, k)
    print(f"player {k}: cost change {delta_cost:.6e}", file=out)
    print("best response: " + " ".join(format(x, ".12g") for x in profile.flow[k]), file=out)
    if cfg.paths.get("out"):
        inst.save_flow(profile, cfg.paths["out"], ff.epsilon, ff.algorithm, note=f"best response of player {k}")
    return 0


def _cmd_gen(cfg: RunConfig, out) -> int:
    o = cfg.options
    try:
        instance = inst.generate(cfg.seed, o["n"], o["m"], o["family"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    inst.save(instance, cfg.paths["out"])
    print(f"wrote {cfg.paths['out']}: {instance!r}", file=out)
    return 0


def _cmd_typesets(cfg: RunConfig, out) -> int:
    o = cfg.options
    if o["n"] < 1 or o["m"] < 1:
        raise ConfigError("--n and --m must be at least 1")
    sets = enumerate_typesets(o["n"], o["m"])
    if o["count_only"]:
        print(len(sets), file=out)
    else:
        for ts in sets:
            print(" ".join(str(b) for b in ts.bin_sizes) + "\t" + str(ts), file=out)
    return 0


def bench_rows(seeds, n_values, m, epsilons, family, algorithm, precision) -> list[list]:
    algos = ["players-exp", "edges-exp"] if algorithm == "both" else [algorithm]
    rows = []
    for seed in seeds:
        for n in n_values:
            instance = inst.generate(seed, n, m, family)
            for eps in epsilons:
                for a in algos:
                    res = _solve(instance, a, eps, precision)
                    rows.append([n, m, eps, a, res.probes, round(res.wall_time * 1000, 3), res.report.max_gap])
    rows.sort(key=lambda r: (r[0], r[1], -r[2], r[3]))
    return rows


def _cmd_bench(cfg: RunConfig, out) -> int:
    o = cfg.options
    rows = bench_rows(range(cfg.seed, cfg.seed + o["seeds"]), o["n_values"], o["m"], o["epsilons"],
                      o["family"], cfg.algorithm, cfg.precision)
    dest = open(cfg.paths["out"], "w", newline="") if cfg.paths.get("out") else out
    try:
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in rows:
            w.writerow([r[0], r[1], format(r[2], "g"), r[3], r[4], r[5], format(r[6], ".6e")])
    finally:
        if dest is not out:
            dest.close()
    return 0


COMMANDS = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "best-response": _cmd_best_response,
    "gen": _cmd_gen,
    "typesets": _cmd_typesets,
    "bench": _cmd_bench,
}


def run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        return COMMANDS[cfg.command](cfg, out)
    except (inst.InstanceError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PrecisionError, SolverFailure, InvariantError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)
