"""Randomized cross-checks of the solver against oracles and analytical bounds."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations

from .model import DeadlineProblem, Platform, Task, TaskGraph
from .optimizer import ratio_bounds, ratio_relation_residual, solve_constrained
from .oracle import default_grid, enumerate_schedules, grid_minimize_energy
from .scheduler import metrics_for

RATIO_SLACK = 1e-8
RESIDUAL_TOL = 1e-8
ORACLE_RTOL = 1e-4
ENERGY_RTOL = 1e-9


def random_platform(rng: random.Random, M=(2, 6), alpha=(2.0, 3.0), K=(0.0, 0.5),
                    c2=(0.0, 0.5), c3=(0.0, 2.0)) -> Platform:
    return Platform(
        M=rng.randint(*M),
        c1=rng.uniform(0.5, 2.0),
        c2=rng.uniform(*c2),
        c3=rng.uniform(*c3),
        alpha=rng.uniform(*alpha),
        K=rng.uniform(*K),
        t_a=rng.uniform(0.5, 2.0),
    )


def random_problem(rng: random.Random, platform: Platform, stall=(0.0, 10.0),
                   active=None, slack=(0.2, 5.0)) -> DeadlineProblem:
    """Random workload; the compute budget is ``slack`` times the cycle count."""
    M = platform.M
    k = active if active is not None else rng.randint(1, M)
    w = [0.0] * M
    for m in rng.sample(range(M), k):
        w[m] = rng.uniform(0.5, 10.0)
    d = rng.uniform(*stall) / platform.t_a
    S = sum(w)
    T = S * d * platform.t_a + S * rng.uniform(*slack)
    return DeadlineProblem(platform, w, d, T)


def random_dag(rng: random.Random, n=(2, 8), density=(0.0, 0.6), cw=(1, 20), d=0.0) -> TaskGraph:
    size = rng.randint(*n)
    p = rng.uniform(*density)
    tasks = [Task(f"t{i}", rng.randint(*cw)) for i in range(size)]
    edges = [(f"t{i}", f"t{j}") for i, j in combinations(range(size), 2) if rng.random() < p]
    return TaskGraph(tasks, edges, d)


def ratio_interval_violations(problem: DeadlineProblem, result, dynamic: bool) -> list[str]:
    p = problem.platform
    levels = problem.w.active_levels()
    bad = []
    for n, m in combinations(levels, 2):
        x = result.f.level(m) / result.f.level(n)
        b = ratio_bounds(p, m, n)
        ok = b.contains_dynamic(x, RATIO_SLACK) if dynamic else b.contains_total(x, RATIO_SLACK)
        if not ok:
            bad.append(f"f_{m}/f_{n}={x!r} outside [{b.lower!r}, "
                       f"{b.upper_dynamic if dynamic else b.upper_total!r}]")
    return bad


def kkt_violations(problem: DeadlineProblem, result) -> list[str]:
    T = problem.t_budget
    bad = []
    if abs(result.dual_multiplier * (T - result.time)) >= 1e-8 * T:
        bad.append("complementary slackness")
    if result.time > T * (1 + 1e-9):
        bad.append("deadline exceeded")
    if result.deadline_binding and abs(result.time - T) > 1e-10 * T:
        bad.append("binding deadline not tight")
    return bad


def criterion_violation(graph: TaskGraph, platform: Platform, t_budget: float):
    """None if the criterion-minimal schedules include a dynamic-energy minimizer."""
    dyn = platform.dynamic_only()
    rows = []
    for sched in enumerate_schedules(graph, platform.M):
        c = metrics_for(sched.w, platform, graph.d, t_budget).criterion
        e = solve_constrained(DeadlineProblem(dyn, sched.w, graph.d, t_budget)).energy.total
        rows.append((c, e, sched.w.w))
    c_min = min(r[0] for r in rows)
    e_min = min(r[1] for r in rows)
    e_best = min(r[1] for r in rows if r[0] <= c_min * (1 + 1e-12))
    if e_best > e_min * (1 + ENERGY_RTOL):
        return f"criterion pick has energy {e_best!r}, minimum is {e_min!r}"
    return None


@dataclass
class Suite:
    name: str
    passed: int = 0
    failures: list[str] = field(default_factory=list)

    def record(self, label: str, problems) -> None:
        if problems:
            self.failures.append(f"{label}: {'; '.join(problems)}")
        else:
            self.passed += 1


def run_validation(seed: int = 0, instances: int = 200) -> tuple[list[str], bool]:
    """Run every suite on ``instances`` random cases; returns report lines and overall status."""
    suites = {k: Suite(k) for k in (
        "ratio-interval-total", "ratio-interval-dynamic", "stationarity-residual",
        "kkt", "grid-oracle", "criterion-ranking")}
    for i in range(instances):
        rng = random.Random(f"{seed}:{i}")
        label = f"instance {i}"
        platform = random_platform(rng)
        problem = random_problem(rng, platform)
        full = solve_constrained(problem)
        suites["ratio-interval-total"].record(label, ratio_interval_violations(problem, full, False))
        suites["kkt"].record(label, kkt_violations(problem, full))

        dyn_problem = DeadlineProblem(platform.dynamic_only(), problem.w, problem.d, problem.t_budget)
        dyn = solve_constrained(dyn_problem)
        suites["ratio-interval-dynamic"].record(label, ratio_interval_violations(dyn_problem, dyn, True))
        resid = []
        levels = problem.w.active_levels()
        for n, m in combinations(levels, 2):
            r = ratio_relation_residual(platform, problem.d, m, n, dyn.f.level(m), dyn.f.level(n))
            if abs(r) >= RESIDUAL_TOL:
                resid.append(f"levels ({m},{n}) residual {r!r}")
        suites["stationarity-residual"].record(label, resid)

        # the oracle's tolerance is calibrated for three active levels
        small = random_problem(rng, random_platform(rng, M=(3, 6)), active=3)
        exact = solve_constrained(small)
        _, e_grid = grid_minimize_energy(small, default_grid(small))
        rel = (e_grid - exact.energy.total) / exact.energy.total
        grid_bad = []
        if abs(rel) > ORACLE_RTOL:
            grid_bad.append(f"relative energy gap {rel!r}")
        suites["grid-oracle"].record(label, grid_bad)

        graph = random_dag(rng, n=(2, 6), d=rng.uniform(0.0, 2.0) / platform.t_a)
        S_max = sum(t.cw for t in graph.tasks)
        t_budget = S_max * graph.d * platform.t_a + S_max * rng.uniform(0.5, 3.0)
        sched_platform = Platform(M=min(platform.M, 3), c1=platform.c1, alpha=platform.alpha,
                                  K=platform.K, t_a=platform.t_a)
        why = criterion_violation(graph, sched_platform, t_budget)
        suites["criterion-ranking"].record(label, [why] if why else [])

    lines = [f"validate seed={seed} instances={instances}"]
    ok = True
    for s in suites.values():
        status = "PASS" if not s.failures else "FAIL"
        ok = ok and not s.failures
        lines.append(f"{status} {s.name}: {s.passed}/{s.passed + len(s.failures)}")
        lines.extend(f"  {msg}" for msg in s.failures[:5])
    lines.append("OVERALL " + ("PASS" if ok else "FAIL"))
    return lines, ok
