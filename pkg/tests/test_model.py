import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from memdvfs.model import (
    UNUSED,
    DeadlineProblem,
    InfeasibleDeadline,
    ParallelismVector,
    Platform,
    Task,
    TaskGraph,
    chip_power,
    completion_time,
    effective_cores,
    energy_per_cycle,
    total_energy,
)

alphas = st.one_of(st.just(2.0), st.floats(2.05, 4.0))
Ks = st.floats(0.0, 0.95)
freqs = st.floats(1e-3, 1e3)


@st.composite
def platforms(draw, M=st.integers(2, 8)):
    return Platform(
        M=draw(M),
        c1=draw(st.floats(0.1, 5.0)),
        c2=draw(st.floats(0.0, 2.0)),
        c3=draw(st.one_of(st.just(0.0), st.floats(1e-3, 5.0))),
        alpha=draw(alphas),
        K=draw(Ks),
        t_a=draw(st.floats(0.0, 2.0)),
    )


@st.composite
def problems_with_f(draw):
    p = draw(platforms())
    w = draw(st.lists(st.sampled_from([0.0, 0.5, 1.0, 3.0, 17.0]), min_size=p.M, max_size=p.M))
    if not any(w):
        w[draw(st.integers(0, p.M - 1))] = 2.0
    d = draw(st.floats(0.0, 5.0))
    f = [draw(freqs) if x > 0 else UNUSED for x in w]
    floor = sum(w) * d * p.t_a
    return DeadlineProblem(p, w, d, floor + 1.0), f


class TestPlatform:
    def test_rejects_bad_constants(self):
        for kw in ({"M": 1}, {"c1": 0.0}, {"alpha": 1.5}, {"K": 1.0}, {"K": -0.1},
                   {"t_a": -1.0}, {"c2": -1.0}, {"c3": -0.5}, {"M": 2.5}):
            args = dict(M=4, c1=1.0) | kw
            with pytest.raises(ValueError):
                Platform(**args)

    def test_effective_cores(self):
        p = Platform(M=4, c1=1.0, K=0.25)
        assert [effective_cores(p, m) for m in range(1, 5)] == [1.75, 2.5, 3.25, 4.0]
        with pytest.raises(ValueError):
            effective_cores(p, 0)
        with pytest.raises(ValueError):
            effective_cores(p, 5)

    @given(M=st.integers(2, 16), K=Ks)
    def test_effective_cores_positive_and_increasing(self, M, K):
        p = Platform(M=M, c1=1.0, K=K)
        mp = [p.effective_cores(m) for m in range(1, M + 1)]
        assert all(x > 0 for x in mp)
        assert all(b > a for a, b in zip(mp, mp[1:]))

    def test_dynamic_only(self):
        p = Platform(M=3, c1=2.0, c2=1.0, c3=4.0, K=0.1)
        q = p.dynamic_only()
        assert (q.c2, q.c3, q.c1, q.K) == (0.0, 0.0, 2.0, 0.1)


class TestPower:
    def test_serial_reduces_to_m_c1_f2(self):
        p = Platform(M=4, c1=1.0)
        assert chip_power(p, 2, 1.0) == 2.0

    def test_hand_evaluated(self):
        p = Platform(M=4, c1=1.0, c2=1.0, c3=1.0, alpha=2.0, K=0.5)
        assert chip_power(p, 2, 2.0) == pytest.approx(15.0, rel=1e-15)

    def test_energy_per_cycle_hand_evaluated(self):
        p = Platform(M=2, c1=1.0, alpha=3.0)
        assert energy_per_cycle(p, 1, 2.0) == pytest.approx(4.0, rel=1e-15)

    @pytest.mark.parametrize("f", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_frequency(self, f):
        p = Platform(M=4, c1=1.0)
        with pytest.raises(ValueError):
            chip_power(p, 1, f)
        with pytest.raises(ValueError):
            energy_per_cycle(p, 1, f)

    @given(p=platforms(), f=freqs, data=st.data())
    def test_energy_per_cycle_is_power_over_f(self, p, f, data):
        m = data.draw(st.integers(1, p.M))
        assert energy_per_cycle(p, m, f) * f == pytest.approx(chip_power(p, m, f), rel=1e-12)

    def test_grows_like_f_alpha_minus_one(self):
        p = Platform(M=4, c1=1.0, c2=0.0, c3=0.0, alpha=2.5)
        a, b = energy_per_cycle(p, 2, 1e6), energy_per_cycle(p, 2, 1e7)
        assert b / a == pytest.approx(10 ** 1.5, rel=1e-12)

    @given(p=platforms(), data=st.data())
    def test_strict_convexity(self, p, data):
        m = data.draw(st.integers(1, p.M))
        xs = np.geomspace(1e-2, 1e2, 60)
        # energy per cycle is affine in f when alpha == 2 and c3 == 0
        strict = [chip_power]
        if p.alpha > 2 or p.c3 > 0:
            strict.append(energy_per_cycle)
        for fn in (chip_power, energy_per_cycle):
            y = np.array([fn(p, m, x) for x in xs])
            # slopes between neighbours on the uneven grid
            s = np.diff(y) / np.diff(xs)
            if fn in strict:
                assert np.all(np.diff(s) > 0)
            else:
                assert np.all(np.diff(s) >= -1e-12 * np.abs(s[1:]))


class TestEnergyAndTime:
    def test_single_level_closed_form(self):
        p = Platform(M=4, c1=1.5, alpha=2.5, t_a=0.5)
        prob = DeadlineProblem(p, [3.0, 0, 0, 0], 2.0, 100.0)
        f = 1.7
        want = 1.5 * 3.0 * f ** 1.5 * (1 + 2.0 * 0.5 * f)
        got = total_energy(prob, [f, None, None, None]).total
        assert got == pytest.approx(want, rel=1e-14)

    def test_time_hand_evaluated(self):
        p = Platform(M=4, c1=1.0, t_a=1.0)
        prob = DeadlineProblem(p, [2, 2, 0, 0], 0.5, 10.0)
        assert completion_time(prob, [1.0, 2.0, None, None]) == pytest.approx(5.0, rel=1e-15)

    def test_time_trivial(self):
        p = Platform(M=4, c1=1.0)
        prob = DeadlineProblem(p, [1, 0, 0, 0], 0.0, 10.0)
        assert completion_time(prob, [1.0, None, None, None]) == 1.0

    def test_rejects_missing_frequency(self):
        p = Platform(M=2, c1=1.0)
        prob = DeadlineProblem(p, [1, 1], 0.0, 10.0)
        with pytest.raises(ValueError):
            total_energy(prob, [1.0, None])
        with pytest.raises(ValueError):
            completion_time(prob, [1.0, 0.0])
        with pytest.raises(ValueError):
            total_energy(prob, [1.0])

    @given(problems_with_f())
    def test_components_nonnegative_and_sum(self, pf):
        prob, f = pf
        e = total_energy(prob, f)
        for part in (e.memory_dynamic, e.instruction_dynamic, e.static_energy):
            assert part >= 0
        assert math.fsum([e.memory_dynamic, e.instruction_dynamic, e.static_energy]) == \
            pytest.approx(e.total, rel=1e-9)

    @given(problems_with_f())
    def test_total_is_direct_summation(self, pf):
        prob, f = pf
        p = prob.platform
        s = prob.d * p.t_a
        direct = sum(chip_power(p, m, fm) / fm * (wm + wm * s * fm)
                     for m, (wm, fm) in enumerate(zip(prob.w, f), start=1) if wm > 0)
        assert total_energy(prob, f).total == pytest.approx(direct, rel=1e-12)

    @given(problems_with_f())
    def test_linear_in_workload(self, pf):
        prob, f = pf
        doubled = DeadlineProblem(prob.platform, prob.w.scaled(2.0), prob.d, 2 * prob.t_budget)
        assert total_energy(doubled, f).total == pytest.approx(2 * total_energy(prob, f).total,
                                                               rel=1e-13)

    @given(problems_with_f())
    def test_time_decreases_in_each_frequency(self, pf):
        prob, f = pf
        t0 = completion_time(prob, f)
        for i, fm in enumerate(f):
            if fm is not None:
                g = list(f)
                g[i] = fm * 1.01
                assert completion_time(prob, g) < t0

    @given(p=platforms(), data=st.data())
    def test_predecessor_model_reduction(self, p, data):
        # K=0, d=0: energy is sum of (m c1 f^alpha + c2 f + c3) w / f
        q = Platform(M=p.M, c1=p.c1, c2=p.c2, c3=p.c3, alpha=p.alpha, K=0.0, t_a=p.t_a)
        w = data.draw(st.lists(st.floats(0.1, 10.0), min_size=p.M, max_size=p.M))
        f = data.draw(st.lists(freqs, min_size=p.M, max_size=p.M))
        prob = DeadlineProblem(q, w, 0.0, 1.0)
        want = sum((m * q.c1 * fm ** q.alpha + q.c2 * fm + q.c3) * wm / fm
                   for m, (wm, fm) in enumerate(zip(w, f), start=1))
        assert total_energy(prob, f).total == pytest.approx(want, rel=1e-12)
        assert completion_time(prob, f) == math.fsum(wm / fm for wm, fm in zip(w, f))


class TestProblem:
    def test_infeasible_names_floor(self):
        p = Platform(M=2, c1=1.0, t_a=1.0)
        with pytest.raises(InfeasibleDeadline) as e:
            DeadlineProblem(p, [2, 2], 0.5, 2.0)
        assert e.value.memory_floor == 2.0
        assert "memory floor" in str(e.value)

    def test_vector_validation(self):
        p = Platform(M=3, c1=1.0)
        with pytest.raises(ValueError):
            DeadlineProblem(p, [1, 1], 0.0, 1.0)
        with pytest.raises(ValueError):
            ParallelismVector((0, 0, 0))
        with pytest.raises(ValueError):
            ParallelismVector((1, -1, 0))

    def test_budget_split(self):
        p = Platform(M=2, c1=1.0, t_a=2.0)
        prob = DeadlineProblem(p, [1, 3], 0.25, 5.0)
        assert prob.memory_floor == 2.0
        assert prob.compute_budget == 3.0


class TestGraph:
    def test_rejects_cycles_and_unknown_ids(self):
        a, b = Task("a", 1), Task("b", 2)
        with pytest.raises(ValueError):
            TaskGraph([a, b], [("a", "b"), ("b", "a")])
        with pytest.raises(ValueError):
            TaskGraph([a, b], [("a", "c")])
        with pytest.raises(ValueError):
            TaskGraph([a, Task("a", 3)])
        with pytest.raises(ValueError):
            TaskGraph([a], d=-1.0)
        with pytest.raises(ValueError):
            Task("x", 0)

    def test_topological_order_is_deterministic(self):
        g = TaskGraph([Task(x, 1) for x in "dcba"], [("c", "a")])
        assert g.topological_order() == ["b", "c", "a", "d"]
