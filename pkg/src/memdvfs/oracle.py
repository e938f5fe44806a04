"""Brute-force verifiers. Slow by design and independent of the solver paths."""

from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import UNUSED, DeadlineProblem, FrequencyAssignment, TaskGraph
from .scheduler import Placement, Schedule

MAX_ENUM_TASKS = 8
MAX_ENUM_CORES = 3
MAX_GRID_LEVELS = 4


class NoFeasiblePoint(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    f_min: float
    f_max: float
    points: int = 300

    def __post_init__(self):
        if not 0 < self.f_min < self.f_max:
            raise ValueError("need 0 < f_min < f_max")
        if self.points < 100:
            raise ValueError("grid needs at least 100 points per dimension")

    def axis(self) -> np.ndarray:
        return np.geomspace(self.f_min, self.f_max, self.points)


def _level_tables(problem: DeadlineProblem, m: int, f: np.ndarray):
    # energy and compute time of one level evaluated straight from the
    # per-cycle energy times (w + w d t_a f) form
    p = problem.platform
    wm = problem.w[m - 1]
    mp = m + p.K * (p.M - m)
    per_cycle = mp * p.c1 * f ** (p.alpha - 1) + p.c2 + p.c3 / f
    return per_cycle * (wm + wm * problem.stall * f), wm / f


def _grid_search(problem, levels, axes, budget):
    tables = [_level_tables(problem, m, ax) for m, ax in zip(levels, axes)]
    best_e, best_idx = math.inf, None
    if len(levels) == 1:
        e, t = tables[0]
        ok = t <= budget
        if ok.any():
            i = int(np.argmin(np.where(ok, e, np.inf)))
            return float(e[i]), (i,)
        return best_e, None
    (ea, ta), (eb, tb) = tables[-2], tables[-1]
    plane_e = ea[:, None] + eb[None, :]
    plane_t = ta[:, None] + tb[None, :]
    outer = [range(len(ax)) for ax in axes[:-2]]
    for idx in itertools.product(*outer):
        e0 = sum(tables[k][0][i] for k, i in enumerate(idx))
        t0 = sum(tables[k][1][i] for k, i in enumerate(idx))
        masked = np.where(plane_t <= budget - t0, plane_e, np.inf)
        j = int(np.argmin(masked))
        if masked.flat[j] + e0 < best_e:
            best_e = float(masked.flat[j] + e0)
            best_idx = idx + np.unravel_index(j, plane_e.shape)
    return best_e, best_idx


def grid_minimize_energy(problem: DeadlineProblem, grid: GridSpec, refine: bool = True):
    """Exhaustive deadline-filtered search over a log-spaced frequency grid.

    After the coarse pass the grid is rebuilt around the best point with a
    span ten times narrower (same point count) and searched again.
    Returns ``(FrequencyAssignment, energy)``.
    """
    levels = problem.w.active_levels()
    if len(levels) > MAX_GRID_LEVELS:
        raise ValueError(f"grid oracle supports at most {MAX_GRID_LEVELS} active levels")
    budget = problem.compute_budget
    axes = [grid.axis()] * len(levels)
    best_e, idx = _grid_search(problem, levels, axes, budget)
    if idx is None:
        raise NoFeasiblePoint("no grid point meets the deadline")
    best_f = [float(ax[i]) for ax, i in zip(axes, idx)]

    if refine:
        half_span = math.log(grid.f_max / grid.f_min) / 20.0
        axes = [np.exp(np.linspace(math.log(f) - half_span, math.log(f) + half_span, grid.points))
                for f in best_f]
        e2, idx2 = _grid_search(problem, levels, axes, budget)
        if idx2 is not None and e2 < best_e:
            best_e = e2
            best_f = [float(ax[i]) for ax, i in zip(axes, idx2)]

    freqs = dict(zip(levels, best_f))
    f = FrequencyAssignment(tuple(freqs.get(m, UNUSED) for m in range(1, problem.platform.M + 1)))
    return f, best_e


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_1d(fn: Callable, bracket, rtol: float = 1e-10, maxiter: int = 10_000):
    """Minimizer of a unimodal ``fn`` on ``bracket = (a, b)``.

    Arithmetic follows the type of the bracket endpoints, so an ``mpmath.mpf``
    bracket with an mpmath-aware ``fn`` runs at extended precision.
    """
    a, b = bracket
    if not a < b:
        raise ValueError("bracket must satisfy a < b")

    def ev(x):
        y = fn(x)
        if not math.isfinite(float(y)):
            raise ValueError(f"non-finite function value at x={x!r}")
        return y

    fa, fb = ev(a), ev(b)
    c = b - (b - a) * _INVPHI
    d = a + (b - a) * _INVPHI
    fc, fd = ev(c), ev(d)
    for _ in range(maxiter):
        if b - a <= rtol * abs(c + d) / 2:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INVPHI
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INVPHI
            fd = ev(d)
    x = (a + b) / 2
    fx = ev(x)
    # monotone functions converge onto an endpoint; return it exactly
    candidates = [(fx, 0, x)]
    if a == bracket[0]:
        candidates.append((fa, 1, a))
    if b == bracket[1]:
        candidates.append((fb, 1, b))
    return min(candidates, key=lambda c: (c[0], c[1]))[2]


def reference_energy_mp(problem: DeadlineProblem, dps: int = 40) -> Callable:
    """Total energy of the assignment f_m = f' / m'**(1/(alpha+1)) in mpmath.

    Built by summing per-level energies directly, not from the closed-form
    coefficients used by the optimizer.
    """
    import mpmath

    mpmath.mp.dps = dps
    p = problem.platform
    mpf = mpmath.mpf
    alpha, c1, c2, c3 = mpf(p.alpha), mpf(p.c1), mpf(p.c2), mpf(p.c3)
    s = mpf(problem.d) * mpf(p.t_a)
    levels = [(mpf(m) + mpf(p.K) * (p.M - m), mpf(x))
              for m, x in enumerate(problem.w, start=1) if x > 0]

    def energy(f_ref):
        f_ref = mpf(f_ref)
        total = mpf(0)
        for mp_, wm in levels:
            f = f_ref / mp_ ** (1 / (alpha + 1))
            per_cycle = mp_ * c1 * f ** (alpha - 1) + c2 + c3 / f
            total += per_cycle * (wm + wm * s * f)
        return total

    return energy


def enumerate_schedules(graph: TaskGraph, M: int) -> list[Schedule]:
    """Every greedy placement (task order x core choice), one schedule per distinct w.

    A greedy placement appends a task to a core at the earliest start allowed
    by that core and the task's predecessors. Any such schedule is reproduced
    by placing its tasks in order of start time, so only that order is
    explored. Time is re-based to the latest start after each placement: the
    busy profile before it is final, and states that agree from then on are
    memoized once. In a re-based state ``-1`` stands for "strictly earlier".
    """
    n = len(graph.tasks)
    if n > MAX_ENUM_TASKS or M > MAX_ENUM_CORES:
        raise ValueError(
            f"enumeration is capped at {MAX_ENUM_TASKS} tasks and {MAX_ENUM_CORES} cores "
            f"(got {n} tasks, M={M})")
    if M < 1:
        raise ValueError("need at least one core")
    preds = {t: frozenset(q) for t, q in graph.predecessors().items()}
    succ = graph.successors()
    work = graph.work
    ids = graph.ids
    dtype = np.int64 if all(float(x).is_integer() for x in work.values()) else np.float64
    memo: dict = {}

    def rebase(x, shift):
        return x - shift if x >= shift else -1

    def solve(key):
        # -> (distinct w suffixes as rows, back-pointers, moves)
        if key in memo:
            return memo[key]
        done, core_free, spans, ends = key
        if len(done) == n:
            memo[key] = (np.array([_profile(spans, M)], dtype=dtype), None, None)
            return memo[key]
        end_of = dict(ends)
        moves, blocks, move_ids, rows = [], [], [], []
        for t in ids:
            if t in done or not preds[t] <= done:
                continue
            ready_at = max((end_of.get(q, -1) for q in preds[t]), default=-1)
            for i, c in enumerate(core_free):
                if i and core_free[i - 1] == c:
                    continue
                start = max(c, ready_at)
                if start < 0:
                    # would start before an already placed task
                    continue
                stop = start + work[t]
                free = core_free[:i] + core_free[i + 1:] + (stop,)
                shift = max(start, min(free))
                all_spans = spans + ((start, stop),)
                new_done = done | {t}
                sub_key = (
                    new_done,
                    tuple(sorted(rebase(x, shift) for x in free)),
                    tuple(sorted((max(a, shift) - shift, b - shift)
                                 for a, b in all_spans if b > shift)),
                    tuple(sorted((u, e - shift) for u, e in ends + ((t, stop),)
                                 if e >= shift and any(s not in new_done for s in succ[u]))),
                )
                tails = solve(sub_key)[0]
                if shift > 0:
                    head = _profile(tuple((a, min(b, shift)) for a, b in all_spans if a < shift), M)
                    tails = tails + np.asarray(head, dtype=dtype)
                move_ids.append(np.full(len(tails), len(moves)))
                rows.append(np.arange(len(tails)))
                moves.append((t, start, stop, shift, sub_key))
                blocks.append(tails)
        if not blocks:
            memo[key] = (np.empty((0, M), dtype=dtype), None, None)
            return memo[key]
        allw = np.concatenate(blocks)
        uniq, first = np.unique(allw, axis=0, return_index=True)
        ptr = (np.concatenate(move_ids)[first], np.concatenate(rows)[first])
        memo[key] = (uniq, ptr, moves)
        return memo[key]

    def rebuild(key, row):
        triples = []
        offset = 0
        while True:
            _, ptr, moves = memo[key]
            if ptr is None:
                return triples
            t, start, stop, shift, key = moves[ptr[0][row]]
            row = ptr[1][row]
            triples.append((t, start + offset, stop + offset))
            offset += shift

    root = (frozenset(), (0,) * M, (), ())
    result = solve(root)[0]
    return [_assign_cores(rebuild(root, r), M) for r in range(len(result))]


def _profile(spans, M) -> tuple:
    events = sorted([(a, 1) for a, _ in spans] + [(b, -1) for _, b in spans])
    w = [0] * M
    busy, prev = 0, None
    for t, delta in events:
        if busy > 0 and t > prev:
            w[busy - 1] += t - prev
        busy += delta
        prev = t
    return tuple(w)


def _assign_cores(triples, M) -> Schedule:
    # at most M spans overlap, so first-free-core assignment always succeeds
    free = [0] * M
    placements = []
    for task, start, stop in sorted(triples, key=lambda x: (x[1], x[2], x[0])):
        core = next(c for c in range(M) if free[c] <= start)
        free[core] = stop
        placements.append(Placement(task, core, start, stop))
    return Schedule(tuple(placements), M)


def _bisect_level(g, lo, hi, increasing, iters=200):
    # boundary of the convex sublevel set {g <= 0} between lo and hi
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if (g(mid) <= 0) == increasing:
            lo = mid
        else:
            hi = mid
    return hi if increasing else lo


def default_grid(problem: DeadlineProblem, points: int = 300, rounds: int = 3) -> GridSpec:
    """Box that must contain the constrained optimum, derived without the solver.

    The uniform frequency that meets the deadline exactly is feasible with
    energy ``E_ref``. At any better point level ``m`` spends at most
    ``E_ref`` minus the other levels' smallest possible energies, which bounds
    ``f_m`` on both sides of that level's (convex) energy minimum. Upper
    bounds on the other levels then leave level ``m`` a limited share of the
    deadline, which raises its lower bound. Both steps are repeated.
    """
    budget = problem.compute_budget
    levels = problem.w.active_levels()
    w = {m: problem.w[m - 1] for m in levels}
    F = math.fsum(w.values()) / budget

    def level_energy(m):
        return lambda f: float(_level_tables(problem, m, np.array([f]))[0][0])

    E = {m: level_energy(m) for m in levels}
    e_ref = sum(E[m](F) for m in levels)
    lo = {m: w[m] / budget for m in levels}
    argmin = {}
    for m in levels:
        hi = max(F, lo[m]) * 2.0
        while E[m](hi * 2.0) < E[m](hi):
            hi *= 2.0
        argmin[m] = math.exp(golden_section_1d(lambda u: E[m](math.exp(u)),
                                               (math.log(lo[m]), math.log(hi))))
    hi = {m: math.inf for m in levels}
    for _ in range(rounds):
        # smallest energy of each level inside its current interval
        lowest = {m: E[m](min(max(argmin[m], lo[m]), hi[m])) for m in levels}
        for m in levels:
            cap = e_ref - sum(lowest[n] for n in levels if n != m)
            g = lambda f, m=m, cap=cap: E[m](f) - cap
            top = max(argmin[m], lo[m]) * 2.0
            while g(top) <= 0:
                top *= 2.0
            hi[m] = min(hi[m], _bisect_level(g, max(argmin[m], lo[m]), top, increasing=True))
            if argmin[m] > lo[m] and g(lo[m]) > 0:
                lo[m] = _bisect_level(g, lo[m], argmin[m], increasing=False)
        for m in levels:
            share = budget - math.fsum(w[n] / hi[n] for n in levels if n != m)
            lo[m] = max(lo[m], w[m] / share)
    return GridSpec(min(lo.values()) * 0.999, max(hi.values()) * 1.001, points)
