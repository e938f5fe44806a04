"""Chip power, energy and completion-time model for global DVFS.

Units are never converted: frequencies in Hz, times in seconds, workloads in
CPU cycles. ``d * t_a`` is the memory stall time per compute cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

# Frequency marker for parallelism levels with w_m == 0.
UNUSED = None


class InfeasibleDeadline(ValueError):
    """The deadline does not exceed the frequency-independent memory time."""

    def __init__(self, t_budget: float, memory_floor: float, detail: str = ""):
        self.t_budget = t_budget
        self.memory_floor = memory_floor
        msg = (f"deadline {t_budget!r} s is infeasible: memory floor is "
               f"{memory_floor!r} s")
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class Platform:
    """Constants of a homogeneous M-core chip under global DVFS.

    Power with ``m`` active cores at frequency ``f`` is
    ``(m + K (M - m)) c1 f**alpha + c2 f + c3``.
    """

    M: int
    c1: float
    c2: float = 0.0
    c3: float = 0.0
    alpha: float = 2.0
    K: float = 0.0
    t_a: float = 0.0

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        for name in ("c1", "c2", "c3", "alpha", "K", "t_a"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not self.c1 > 0:
            raise ValueError(f"c1 must be > 0, got {self.c1!r}")
        if self.c2 < 0 or self.c3 < 0:
            raise ValueError("c2 and c3 must be >= 0")
        if not self.alpha >= 2:
            raise ValueError(f"alpha must be >= 2, got {self.alpha!r}")
        if not 0 <= self.K < 1:
            raise ValueError(f"K must satisfy 0 <= K < 1, got {self.K!r}")
        if self.t_a < 0:
            raise ValueError(f"t_a must be >= 0, got {self.t_a!r}")

    def effective_cores(self, m: int) -> float:
        """Dynamic-power weight m' = m + K (M - m) of ``m`` active cores."""
        check_level(self, m)
        return m + self.K * (self.M - m)

    def dynamic_only(self) -> Platform:
        """Copy with the static power terms removed."""
        return replace(self, c2=0.0, c3=0.0)


def check_level(platform: Platform, m: int) -> None:
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= platform.M:
        raise ValueError(f"active-core count must be in 1..{platform.M}, got {m!r}")


def _check_frequency(f: float) -> None:
    if not f > 0 or not math.isfinite(f):
        raise ValueError(f"frequency must be positive and finite, got {f!r}")


def effective_cores(platform: Platform, m: int) -> float:
    return platform.effective_cores(m)


def chip_power(platform: Platform, m: int, f: float) -> float:
    """Total chip power (W) with ``m`` active cores at frequency ``f``."""
    _check_frequency(f)
    mp = platform.effective_cores(m)
    return mp * platform.c1 * f ** platform.alpha + platform.c2 * f + platform.c3


def energy_per_cycle(platform: Platform, m: int, f: float) -> float:
    """Chip energy (J) per clock cycle, i.e. ``chip_power / f``."""
    _check_frequency(f)
    mp = platform.effective_cores(m)
    return mp * platform.c1 * f ** (platform.alpha - 1) + platform.c2 + platform.c3 / f


@dataclass(frozen=True)
class Task:
    id: str
    cw: float

    def __post_init__(self):
        if not self.cw > 0:
            raise ValueError(f"task {self.id!r}: compute workload must be > 0")


@dataclass(frozen=True)
class TaskGraph:
    """Tasks with precedence edges and an application-wide data-to-CPU ratio."""

    tasks: tuple[Task, ...]
    edges: tuple[tuple[str, str], ...] = ()
    d: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("task ids must be unique")
        if not self.tasks:
            raise ValueError("a task graph needs at least one task")
        if not self.d >= 0:
            raise ValueError(f"d must be >= 0, got {self.d!r}")
        known = set(ids)
        for a, b in self.edges:
            if a not in known or b not in known:
                raise ValueError(f"edge ({a!r}, {b!r}) references an unknown task")
        self.topological_order()

    @property
    def ids(self) -> list[str]:
        return sorted(t.id for t in self.tasks)

    @property
    def work(self) -> dict[str, float]:
        return {t.id: t.cw for t in self.tasks}

    def predecessors(self) -> dict[str, list[str]]:
        preds: dict[str, list[str]] = {t.id: [] for t in self.tasks}
        for a, b in self.edges:
            preds[b].append(a)
        return preds

    def successors(self) -> dict[str, list[str]]:
        succ: dict[str, list[str]] = {t.id: [] for t in self.tasks}
        for a, b in self.edges:
            succ[a].append(b)
        return succ

    def topological_order(self) -> list[str]:
        """Kahn's algorithm, smallest id first among ready tasks."""
        import heapq

        indeg = {t.id: 0 for t in self.tasks}
        for _, b in self.edges:
            indeg[b] += 1
        succ = self.successors()
        heap = [i for i, k in indeg.items() if k == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            u = heapq.heappop(heap)
            order.append(u)
            for v in succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(heap, v)
        if len(order) != len(indeg):
            raise ValueError("task graph contains a cycle")
        return order


@dataclass(frozen=True)
class ParallelismVector:
    """``w[m-1]`` is the number of cycles with exactly ``m`` cores active."""

    w: tuple[float, ...]

    def __post_init__(self):
        w = tuple(self.w)
        if not w:
            raise ValueError("parallelism vector is empty")
        if any(not (x >= 0 and math.isfinite(x)) for x in w):
            raise ValueError("parallelism entries must be finite and >= 0")
        if not any(x > 0 for x in w):
            raise ValueError("parallelism vector has no positive entry")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return len(self.w)

    def __iter__(self):
        return iter(self.w)

    def __getitem__(self, i):
        return self.w[i]

    def active_levels(self) -> list[int]:
        return [m for m, x in enumerate(self.w, start=1) if x > 0]

    def scaled(self, factor: float) -> ParallelismVector:
        return ParallelismVector(tuple(x * factor for x in self.w))


@dataclass(frozen=True)
class FrequencyAssignment:
    """One frequency per parallelism level; unused levels hold ``UNUSED``."""

    f: tuple[Optional[float], ...]

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))

    def __len__(self):
        return len(self.f)

    def __iter__(self):
        return iter(self.f)

    def __getitem__(self, i):
        return self.f[i]

    def level(self, m: int) -> Optional[float]:
        return self.f[m - 1]


@dataclass(frozen=True)
class EnergyBreakdown:
    memory_dynamic: float
    instruction_dynamic: float
    static_energy: float
    total: float

    @property
    def dynamic(self) -> float:
        return self.memory_dynamic + self.instruction_dynamic


@dataclass(frozen=True)
class DeadlineProblem:
    platform: Platform
    w: ParallelismVector
    d: float
    t_budget: float

    def __post_init__(self):
        if not isinstance(self.w, ParallelismVector):
            object.__setattr__(self, "w", ParallelismVector(tuple(self.w)))
        if len(self.w) != self.platform.M:
            raise ValueError(
                f"parallelism vector has length {len(self.w)}, expected M={self.platform.M}")
        if not self.d >= 0:
            raise ValueError(f"d must be >= 0, got {self.d!r}")
        if not self.t_budget > 0:
            raise ValueError(f"t_budget must be > 0, got {self.t_budget!r}")
        if self.t_budget <= self.memory_floor:
            raise InfeasibleDeadline(self.t_budget, self.memory_floor)

    @property
    def stall(self) -> float:
        """Memory stall seconds per compute cycle (d * t_a)."""
        return self.d * self.platform.t_a

    @property
    def memory_floor(self) -> float:
        return math.fsum(self.w) * self.d * self.platform.t_a

    @property
    def compute_budget(self) -> float:
        """Time left for compute cycles once memory stalls are paid."""
        return self.t_budget - self.memory_floor


def _checked_frequencies(problem: DeadlineProblem, f) -> list[tuple[int, float, float]]:
    freqs = f.f if isinstance(f, FrequencyAssignment) else tuple(f)
    if len(freqs) != len(problem.w):
        raise ValueError(
            f"frequency vector has length {len(freqs)}, expected {len(problem.w)}")
    levels = []
    for m, (wm, fm) in enumerate(zip(problem.w, freqs), start=1):
        if wm == 0:
            continue
        if fm is None or not fm > 0:
            raise ValueError(f"level {m} has w={wm} but frequency {fm!r}")
        levels.append((m, wm, fm))
    return levels


def total_energy(problem: DeadlineProblem, f) -> EnergyBreakdown:
    """Energy of the schedule including the cycles clocked during memory stalls."""
    p = problem.platform
    s = problem.stall
    mem, ins, stat, tot = [], [], [], []
    for m, wm, fm in _checked_frequencies(problem, f):
        mp = p.effective_cores(m)
        mem.append(mp * p.c1 * wm * s * fm ** p.alpha)
        ins.append(mp * p.c1 * wm * fm ** (p.alpha - 1))
        stat.extend((p.c2 * wm * s * fm, p.c3 * wm / fm, p.c2 * wm, p.c3 * wm * s))
        tot.append(energy_per_cycle(p, m, fm) * (wm + wm * s * fm))
    return EnergyBreakdown(
        memory_dynamic=math.fsum(mem),
        instruction_dynamic=math.fsum(ins),
        static_energy=math.fsum(stat),
        total=math.fsum(tot),
    )


def completion_time(problem: DeadlineProblem, f) -> float:
    """Compute time at the given frequencies plus the memory floor."""
    levels = _checked_frequencies(problem, f)
    return math.fsum([wm / fm for _, wm, fm in levels]) + problem.memory_floor
