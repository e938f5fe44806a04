import itertools
import math
import random

import mpmath
import pytest

from memdvfs.model import DeadlineProblem, Platform, Task, TaskGraph, total_energy
from memdvfs.optimizer import (
    reference_assignment,
    reference_energy,
    solve_constrained,
    unconstrained_level_frequency,
)
from memdvfs.oracle import (
    GridSpec,
    NoFeasiblePoint,
    default_grid,
    enumerate_schedules,
    golden_section_1d,
    grid_minimize_energy,
    reference_energy_mp,
)
from memdvfs.scheduler import Policy, list_schedule
from memdvfs.validate import random_dag, random_platform, random_problem


def brute_force_profiles(graph, M):
    """w of every (task order, core choice) greedy placement, no pruning at all."""
    preds = graph.predecessors()
    work = graph.work
    out = set()
    for order in itertools.permutations(graph.ids):
        pos = {t: i for i, t in enumerate(order)}
        if any(pos[a] > pos[b] for a, b in graph.edges):
            continue
        for cores in itertools.product(range(M), repeat=len(order)):
            free = [0] * M
            end = {}
            spans = []
            for t, c in zip(order, cores):
                s = max([free[c]] + [end[q] for q in preds[t]])
                end[t] = free[c] = s + work[t]
                spans.append((s, s + work[t]))
            w = [0] * M
            for x in range(max(e for _, e in spans)):
                k = sum(1 for a, b in spans if a <= x < b)
                if k:
                    w[k - 1] += 1
            out.add(tuple(w))
    return out


class TestGrid:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0.0, 1.0)
        with pytest.raises(ValueError):
            GridSpec(2.0, 1.0)
        with pytest.raises(ValueError):
            GridSpec(1.0, 2.0, points=99)
        ax = GridSpec(1.0, 100.0, 101).axis()
        assert ax[0] == 1.0 and ax[-1] == pytest.approx(100.0) and len(ax) == 101

    def test_single_level_matches_golden_section(self):
        p = Platform(M=3, c1=1.0, c2=0.2, c3=0.1, alpha=2.5, K=0.1, t_a=1.0)
        prob = DeadlineProblem(p, [0, 4.0, 0], 0.3, 1e3)
        f, e = grid_minimize_energy(prob, GridSpec(1e-3, 10.0))

        def energy(logf):
            return total_energy(prob, [None, math.exp(logf), None]).total

        x = math.exp(golden_section_1d(energy, (math.log(1e-3), math.log(10.0))))
        assert f.level(2) == pytest.approx(x, rel=2e-3)
        assert e == pytest.approx(energy(math.log(x)), rel=1e-6)

    def test_loose_deadline_near_unconstrained(self):
        p = Platform(M=4, c1=1.0, c2=0.1, c3=0.8, alpha=2.2, K=0.1, t_a=1.0)
        prob = DeadlineProblem(p, [2.0, 0, 1.0, 3.0], 0.2, 1e6)
        # the derived box is decades wide for a loose deadline; use a snug one
        f, _ = grid_minimize_energy(prob, GridSpec(0.1, 10.0))
        for m in (1, 3, 4):
            assert f.level(m) == pytest.approx(unconstrained_level_frequency(p, 0.2, m), rel=1e-3)
        assert f.level(2) is None

    def test_never_beats_solver(self):
        rng = random.Random(11)
        for _ in range(15):
            prob = random_problem(rng, random_platform(rng, M=(3, 6)), active=rng.randint(1, 3))
            r = solve_constrained(prob)
            g = default_grid(prob)
            _, e = grid_minimize_energy(prob, g)
            assert e >= r.energy.total * (1 - 1e-12)
            fs = [x for x in r.f if x]
            assert g.f_min < min(fs) and max(fs) < g.f_max

    def test_nested_refinement_does_not_increase_energy(self):
        rng = random.Random(2)
        for _ in range(5):
            prob = random_problem(rng, random_platform(rng), active=2)
            g = default_grid(prob)
            # 2n - 1 log-spaced points contain the n-point grid
            es = [grid_minimize_energy(prob, GridSpec(g.f_min, g.f_max, n), refine=False)[1]
                  for n in (150, 299, 597)]
            assert es[0] >= es[1] >= es[2]

    def test_refinement_helps(self):
        rng = random.Random(4)
        prob = random_problem(rng, random_platform(rng), active=2)
        g = default_grid(prob)
        coarse = grid_minimize_energy(prob, g, refine=False)[1]
        fine = grid_minimize_energy(prob, g)[1]
        assert fine <= coarse

    def test_errors(self):
        p = Platform(M=6, c1=1.0, c3=1.0)
        prob = DeadlineProblem(p, [1.0] * 6, 0.0, 10.0)
        with pytest.raises(ValueError):
            grid_minimize_energy(prob, GridSpec(0.1, 10.0))
        tight = DeadlineProblem(p, [1.0, 0, 0, 0, 0, 0], 0.0, 0.1)
        with pytest.raises(NoFeasiblePoint):
            grid_minimize_energy(tight, GridSpec(0.1, 5.0))


class TestGoldenSection:
    def test_quadratic(self):
        x = golden_section_1d(lambda t: (t - 1.234) ** 2, (0.0, 5.0), rtol=1e-12)
        assert x == pytest.approx(1.234, rel=1e-7)

    def test_monotone_returns_endpoint(self):
        assert golden_section_1d(lambda t: t, (2.0, 3.0)) == 2.0
        assert golden_section_1d(lambda t: -t, (2.0, 3.0)) == 3.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            golden_section_1d(lambda t: t, (1.0, 1.0))
        with pytest.raises(ValueError):
            golden_section_1d(lambda t: math.inf, (0.0, 1.0))

    def test_extended_precision(self):
        mpmath.mp.dps = 40
        x = golden_section_1d(lambda t: (t - mpmath.mpf(2) / 3) ** 2,
                              (mpmath.mpf(0), mpmath.mpf(1)), rtol=mpmath.mpf(10) ** -30)
        assert abs(x - mpmath.mpf(2) / 3) < mpmath.mpf(10) ** -18

    def test_mp_reference_energy_matches_float(self):
        rng = random.Random(9)
        for _ in range(10):
            prob = random_problem(rng, random_platform(rng))
            fn = reference_energy_mp(prob)
            for f_ref in (0.3, 1.0, 4.0):
                direct = total_energy(prob, reference_assignment(prob, f_ref)).total
                assert float(fn(f_ref)) == pytest.approx(direct, rel=1e-12)
                assert float(fn(f_ref)) == pytest.approx(reference_energy(prob, f_ref), rel=1e-12)


class TestEnumeration:
    def test_caps(self):
        big = TaskGraph([Task(f"t{i}", 1) for i in range(9)])
        with pytest.raises(ValueError):
            enumerate_schedules(big, 2)
        with pytest.raises(ValueError):
            enumerate_schedules(TaskGraph([Task("a", 1)]), 4)

    def test_independent_pair(self):
        g = TaskGraph([Task("a", 2), Task("b", 3)])
        ws = sorted(s.w.w for s in enumerate_schedules(g, 2))
        assert ws == [(1, 2), (5, 0)]

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_brute_force(self, seed):
        rng = random.Random(seed)
        g = random_dag(rng, n=(2, 5), cw=(1, 4))
        M = rng.choice([2, 3])
        scheds = enumerate_schedules(g, M)
        ws = [s.w.w for s in scheds]
        assert len(ws) == len(set(ws))
        assert set(ws) == brute_force_profiles(g, M)
        for s in scheds:
            s.validate(g)

    @pytest.mark.parametrize("seed", range(10))
    def test_contains_list_schedules(self, seed):
        rng = random.Random(100 + seed)
        g = random_dag(rng, n=(3, 8))
        M = rng.choice([2, 3])
        ws = {s.w.w for s in enumerate_schedules(g, M)}
        p = Platform(M=M, c1=1.0)
        for pol in Policy:
            assert list_schedule(g, p, pol).w.w in ws

    def test_eight_independent_tasks(self):
        g = TaskGraph([Task(f"t{i}", i + 1) for i in range(8)])
        ws = [s.w.w for s in enumerate_schedules(g, 3)]
        assert all(sum(m * x for m, x in enumerate(w, start=1)) == 36 for w in ws)
        assert len(ws) == len(set(ws))
