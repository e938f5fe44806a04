"""Command-line front end: optimize, schedule, sweep and validate."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

import numpy as np

from .model import (
    DeadlineProblem,
    InfeasibleDeadline,
    Platform,
    Task,
    TaskGraph,
    total_energy,
)
from .optimizer import (
    overload_limits,
    reference_assignment,
    reference_frequency_dynamic,
    solve_constrained,
    sweep_ratio_vs_overload,
)
from .scheduler import Policy, list_schedule, rank_schedules
from .validate import run_validation

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2

PLATFORM_KEYS = {f.name for f in fields(Platform)}
GRAPH_KEYS = {"d", "tasks", "edges"}
TASK_KEYS = {"id", "cw"}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for infeasibility
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fmt_f(x) -> str:
    return "unused" if x is None else f"{x:.8e}"


def _no_duplicate_keys(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise InputError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    try:
        return json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    except InputError as e:
        raise InputError(f"{path}: {e}") from None


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def load_platform(path: str) -> Platform:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: platform file must hold a JSON object")
    unknown = sorted(set(doc) - PLATFORM_KEYS)
    if unknown:
        raise InputError(f"{path}: unknown platform keys {unknown}")
    for k in ("M", "c1"):
        if k not in doc:
            raise InputError(f"{path}: missing platform key {k!r}")
    for k, v in doc.items():
        if not _is_number(v):
            raise InputError(f"{path}: platform key {k!r} must be a number")
    try:
        return Platform(**doc)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from None


def load_graph(path: str) -> TaskGraph:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: graph file must hold a JSON object")
    unknown = sorted(set(doc) - GRAPH_KEYS)
    if unknown:
        raise InputError(f"{path}: unknown graph keys {unknown}")
    if "tasks" not in doc:
        raise InputError(f"{path}: missing key 'tasks'")
    d = doc.get("d", 0.0)
    if not _is_number(d):
        raise InputError(f"{path}: 'd' must be a number")
    if not isinstance(doc["tasks"], list):
        raise InputError(f"{path}: 'tasks' must be a list")
    tasks = []
    for i, t in enumerate(doc["tasks"]):
        if not isinstance(t, dict) or set(t) != TASK_KEYS:
            raise InputError(f"{path}: task #{i} must have exactly the keys 'id' and 'cw'")
        if not isinstance(t["id"], str):
            raise InputError(f"{path}: task #{i} id must be a string")
        if not isinstance(t["cw"], int) or isinstance(t["cw"], bool):
            raise InputError(f"{path}: task {t['id']!r} cw must be an integer")
        tasks.append((t["id"], t["cw"]))
    edges = doc.get("edges", [])
    if not isinstance(edges, list) or not all(
            isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)
            for e in edges):
        raise InputError(f"{path}: 'edges' must be a list of [from, to] id pairs")
    seen = set()
    for e in edges:
        if tuple(e) in seen:
            raise InputError(f"{path}: duplicate edge {e}")
        seen.add(tuple(e))
    try:
        return TaskGraph([Task(i, cw) for i, cw in tasks], [tuple(e) for e in edges], d)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from None


def parse_w(text: str, M: int) -> list[float]:
    try:
        w = [float(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"-w must be comma-separated numbers, got {text!r}") from None
    if len(w) != M:
        raise InputError(f"-w has {len(w)} entries, platform has M={M}")
    return w


def _result_doc(result) -> dict:
    e = result.energy
    return {
        "f": list(result.f),
        "energy": {
            "memory_dynamic": e.memory_dynamic,
            "instruction_dynamic": e.instruction_dynamic,
            "static": e.static_energy,
            "total": e.total,
        },
        "time": result.time,
        "lambda": result.dual_multiplier,
        "deadline_binding": result.deadline_binding,
    }


def cmd_optimize(args, out) -> int:
    platform = load_platform(args.platform)
    if args.graph:
        graph = load_graph(args.graph)
        sched = list_schedule(graph, platform, args.policy)
        w, d = list(sched.w), graph.d
    else:
        w, d = parse_w(args.w, platform.M), args.d
    if args.dynamic_only:
        platform = platform.dynamic_only()
    problem = DeadlineProblem(platform, w, d, args.t_budget)
    result = solve_constrained(problem, f_cap=args.f_cap)
    doc = {"w": w, "d": d, "t_budget": args.t_budget, "result": _result_doc(result)}
    if args.dynamic_only:
        f_ref = reference_frequency_dynamic(problem)
        f_closed = reference_assignment(problem, f_ref)
        doc["closed_form"] = {
            "f_ref": f_ref,
            "f": list(f_closed),
            "energy": total_energy(problem, f_closed).total,
        }
    if args.json:
        json.dump(doc, out, indent=2)
        out.write("\n")
        return EXIT_OK
    out.write(f"{'m':>3}  {'w_m':>16}  {'f_m':>16}\n")
    for m, (wm, fm) in enumerate(zip(w, result.f), start=1):
        out.write(f"{m:>3}  {wm:>16.9g}  {_fmt_f(fm):>16}\n")
    e = result.energy
    out.write(f"energy total        {e.total:.9g}\n")
    out.write(f"  memory dynamic    {e.memory_dynamic:.9g}\n")
    out.write(f"  instruction dyn.  {e.instruction_dynamic:.9g}\n")
    out.write(f"  static            {e.static_energy:.9g}\n")
    out.write(f"completion time     {result.time:.9g}\n")
    out.write(f"lambda              {result.dual_multiplier:.9g}\n")
    out.write(f"deadline binding    {'yes' if result.deadline_binding else 'no'}\n")
    if args.dynamic_only:
        c = doc["closed_form"]
        out.write(f"closed form f_ref   {_fmt_f(c['f_ref'])}\n")
        out.write("closed form f_m     " + " ".join(_fmt_f(x) for x in c["f"]) + "\n")
        out.write(f"closed form energy  {c['energy']:.9g}\n")
    return EXIT_OK


def cmd_schedule(args, out) -> int:
    platform = load_platform(args.platform)
    graph = load_graph(args.graph)
    policies = args.policies or [p.value for p in Policy]
    rows = rank_schedules(graph, platform, args.t_budget, policies)
    if not args.rank:
        order = {p: i for i, p in enumerate(dict.fromkeys(Policy(p) for p in policies))}
        rows.sort(key=lambda r: order[r.policy])
    if args.json:
        json.dump([{
            "policy": r.policy.value,
            "w": list(r.schedule.w),
            "S": r.metrics.S,
            "S_bar": r.metrics.S_bar,
            "criterion": r.metrics.criterion,
            "result": _result_doc(r.result),
        } for r in rows], out, indent=2)
        out.write("\n")
        return EXIT_OK
    out.write(f"{'policy':<14}  {'S':>14}  {'S_bar':>16}  {'criterion':>16}  {'energy':>16}\n")
    for r in rows:
        m = r.metrics
        out.write(f"{r.policy.value:<14}  {m.S:>14.9g}  {m.S_bar:>16.9g}  "
                  f"{m.criterion:>16.9g}  {r.result.energy.total:>16.9g}\n")
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    platform = load_platform(args.platform)
    if platform.alpha != 2:
        raise InputError(f"sweep needs alpha = 2, platform has alpha = {platform.alpha!r}")
    if not 1 <= args.m <= platform.M:
        raise InputError(f"-m must be in 1..{platform.M}, got {args.m}")
    if args.points < 1:
        raise InputError("--points must be >= 1")
    if not 0 <= args.g_min <= args.g_max:
        raise InputError("need 0 <= --g-min <= --g-max")
    g = np.linspace(args.g_min, args.g_max, args.points)
    rows = sweep_ratio_vs_overload(platform, args.m, g)
    low_g, high_g = overload_limits(platform, args.m)
    lines = ["g,x_m"] + [f"{gv:.17g},{x:.17g}" for gv, x in rows]
    lines.append(f"# limit g->0: {low_g:.17g}")
    lines.append(f"# limit g->inf: {high_g:.17g}")
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_validate(args, out) -> int:
    if args.instances < 0:
        raise InputError("--instances must be >= 0")
    lines, ok = run_validation(args.seed, args.instances)
    out.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="memdvfs",
        description="Energy-optimal global DVFS frequencies for memory-bound task graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="optimal per-level frequencies for one workload")
    p.add_argument("-p", "--platform", required=True, help="platform JSON file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("-g", "--graph", help="task graph JSON file (list scheduled)")
    src.add_argument("-w", help="comma-separated cycles per parallelism level, e.g. 1,0,0,0")
    p.add_argument("--d", type=float, default=0.0, help="data-to-CPU ratio for -w (default 0)")
    p.add_argument("--policy", default=Policy.CRITICAL_PATH.value,
                   choices=[x.value for x in Policy], help="list-scheduling policy for -g")
    p.add_argument("-t", "--t-budget", type=float, required=True, help="deadline in seconds")
    p.add_argument("--dynamic-only", action="store_true",
                   help="drop static power and print the reference-frequency closed form")
    p.add_argument("--f-cap", type=float, default=None, help="optional frequency ceiling")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("schedule", help="rank list-scheduling policies by the energy criterion")
    p.add_argument("-p", "--platform", required=True)
    p.add_argument("-g", "--graph", required=True)
    p.add_argument("-t", "--t-budget", type=float, required=True)
    p.add_argument("--policies", nargs="+", choices=[x.value for x in Policy])
    p.add_argument("--rank", action="store_true", help="sort rows by criterion")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("sweep", help="optimal f_m/f_1 against memory overload (alpha = 2)")
    p.add_argument("-p", "--platform", required=True)
    p.add_argument("-m", type=int, required=True, help="parallelism level")
    p.add_argument("--g-min", type=float, default=0.0)
    p.add_argument("--g-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("-o", "--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="randomized cross-checks against oracles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=200)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except InfeasibleDeadline as e:
        err.write(f"error: {e}\n")
        return EXIT_INFEASIBLE
    except (InputError, ValueError) as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
