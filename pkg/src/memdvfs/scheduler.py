"""List scheduling of task graphs and the energy-aware schedule ranking.

Schedules live in the cycle domain: with one chip-wide frequency per
parallelism level and an application-wide ``d``, cycle counts do not depend on
the frequencies chosen later.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .model import DeadlineProblem, InfeasibleDeadline, ParallelismVector, Platform, TaskGraph
from .optimizer import OptimizationResult, parallelism_weights, solve_constrained


class Policy(str, enum.Enum):
    CRITICAL_PATH = "critical-path"
    LARGEST_WORK = "largest-work"
    FIFO = "fifo"


@dataclass(frozen=True)
class Placement:
    task: str
    core: int
    start: float
    end: float


@dataclass(frozen=True)
class Schedule:
    placements: tuple[Placement, ...]
    M: int

    @cached_property
    def w(self) -> ParallelismVector:
        return _sweep(self.placements, self.M)

    def by_task(self) -> dict[str, Placement]:
        return {p.task: p for p in self.placements}

    def validate(self, graph: TaskGraph) -> None:
        """Raise ValueError unless precedence, core exclusivity and work all hold."""
        at = self.by_task()
        if set(at) != {t.id for t in graph.tasks}:
            raise ValueError("schedule does not place every task exactly once")
        for t in graph.tasks:
            p = at[t.id]
            if p.end - p.start != t.cw:
                raise ValueError(f"task {t.id!r} runs {p.end - p.start} cycles, needs {t.cw}")
            if not 0 <= p.core < self.M:
                raise ValueError(f"task {t.id!r} on nonexistent core {p.core}")
        for a, b in graph.edges:
            if at[b].start < at[a].end:
                raise ValueError(f"task {b!r} starts before predecessor {a!r} ends")
        for core in range(self.M):
            spans = sorted((p.start, p.end) for p in self.placements if p.core == core)
            for (_, e0), (s1, _) in zip(spans, spans[1:]):
                if s1 < e0:
                    raise ValueError(f"overlapping tasks on core {core}")


@dataclass(frozen=True)
class ScheduleMetrics:
    S: float
    S_bar: float
    criterion: float


@dataclass(frozen=True)
class RankedSchedule:
    policy: Policy
    schedule: Schedule
    metrics: ScheduleMetrics
    result: OptimizationResult


def _sweep(placements, M) -> ParallelismVector:
    events = []
    for p in placements:
        events.append((p.start, 1))
        events.append((p.end, -1))
    events.sort()
    w = [0] * M
    busy = 0
    prev = None
    for t, delta in events:
        if busy > 0 and t > prev:
            w[busy - 1] += t - prev
        busy += delta
        prev = t
    return ParallelismVector(tuple(w))


def parallelism_vector(schedule: Schedule, platform: Platform) -> ParallelismVector:
    """Cycles during which exactly m cores are busy, for m = 1..M."""
    if schedule.M != platform.M:
        raise ValueError(f"schedule is for {schedule.M} cores, platform has {platform.M}")
    return schedule.w


def _priorities(graph: TaskGraph, policy: Policy) -> dict[str, float]:
    work = graph.work
    if policy is Policy.LARGEST_WORK:
        return dict(work)
    order = graph.topological_order()
    if policy is Policy.FIFO:
        return {t: -i for i, t in enumerate(order)}
    succ = graph.successors()
    level: dict[str, float] = {}
    for t in reversed(order):
        level[t] = work[t] + max((level[s] for s in succ[t]), default=0)
    return level


def list_schedule(graph: TaskGraph, platform: Platform, policy=Policy.CRITICAL_PATH) -> Schedule:
    """Greedy non-delay list schedule: whenever a core is idle, start the
    highest-priority ready task (ties by ascending id) on the lowest idle core."""
    policy = Policy(policy)
    prio = _priorities(graph, policy)
    preds = graph.predecessors()
    work = graph.work
    M = platform.M

    core_free = [0] * M
    end: dict[str, float] = {}
    placements = []
    pending = set(work)
    now = 0
    while pending:
        ready = [t for t in pending if all(p in end and end[p] <= now for p in preds[t])]
        ready.sort(key=lambda t: (-prio[t], t))
        idle = [c for c in range(M) if core_free[c] <= now]
        for task, core in zip(ready, idle):
            finish = now + work[task]
            placements.append(Placement(task, core, now, finish))
            end[task] = finish
            core_free[core] = finish
            pending.discard(task)
        upcoming = [e for e in core_free if e > now]
        if pending and not upcoming:
            raise RuntimeError("list scheduler stalled")
        if upcoming:
            now = min(upcoming)
    return Schedule(tuple(placements), M)


def schedule_metrics(schedule: Schedule, platform: Platform, d: float, t_budget: float) -> ScheduleMetrics:
    w = parallelism_vector(schedule, platform)
    return metrics_for(w, platform, d, t_budget)


def metrics_for(w: ParallelismVector, platform: Platform, d: float, t_budget: float) -> ScheduleMetrics:
    """Cycle makespan, weighted makespan and the energy-aware criterion."""
    S = math.fsum(w)
    S_bar = math.fsum(p * x for p, x in zip(parallelism_weights(platform), w))
    floor = S * d * platform.t_a
    if not t_budget > floor:
        raise InfeasibleDeadline(t_budget, floor)
    return ScheduleMetrics(S=S, S_bar=S_bar, criterion=S_bar / (t_budget - floor))


def rank_schedules(
    graph: TaskGraph,
    platform: Platform,
    t_budget: float,
    policies: Iterable = tuple(Policy),
) -> list[RankedSchedule]:
    """One row per policy, sorted by ascending criterion (stable in input order)."""
    chosen = list(dict.fromkeys(Policy(p) for p in policies))
    if not chosen:
        raise ValueError("at least one policy is required")
    rows = []
    for policy in chosen:
        sched = list_schedule(graph, platform, policy)
        metrics = schedule_metrics(sched, platform, graph.d, t_budget)
        result = solve_constrained(DeadlineProblem(platform, sched.w, graph.d, t_budget))
        rows.append(RankedSchedule(policy, sched, metrics, result))
    rows.sort(key=lambda r: r.metrics.criterion)
    return rows
