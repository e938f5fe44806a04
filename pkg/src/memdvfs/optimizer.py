"""Optimal per-parallelism-level frequencies under a deadline.

Per level ``m`` the energy is separable, and multiplying its derivative by
``f**2 / w_m`` gives the stationarity polynomial

    P_m(f) = m' c1 d t_a alpha f**(alpha+1) + m' c1 (alpha-1) f**alpha
             + c2 d t_a f**2 - c3

which is strictly increasing on f > 0. With deadline multiplier ``lam`` the
KKT conditions read ``P_m(f_m) = lam`` for every active level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .model import (
    UNUSED,
    DeadlineProblem,
    EnergyBreakdown,
    FrequencyAssignment,
    InfeasibleDeadline,
    Platform,
    check_level,
    completion_time,
    total_energy,
)
from .roots import bracketed_newton, monomial_sum_root


class NoInteriorMinimizer(ValueError):
    """Energy is increasing in f, so the unconstrained optimum is f -> 0."""


@dataclass(frozen=True)
class OptimizationResult:
    f: FrequencyAssignment
    energy: EnergyBreakdown
    time: float
    deadline_binding: bool
    dual_multiplier: float


@dataclass(frozen=True)
class RatioBounds:
    """Intervals containing an optimal f_m / f_n for m >= n."""

    lower: float
    upper_total: float
    upper_dynamic: float

    def contains_total(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper_total + slack

    def contains_dynamic(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper_dynamic + slack


def _stationarity_terms(platform: Platform, d: float, m: int):
    mp = platform.effective_cores(m)
    s = d * platform.t_a
    a = platform.alpha
    coeffs = (mp * platform.c1 * s * a, mp * platform.c1 * (a - 1), platform.c2 * s)
    exps = (a + 1, a, 2.0)
    return coeffs, exps


def stationarity_polynomial(platform: Platform, d: float, m: int, f: float) -> float:
    """``P_m(f)``; zero at the unconstrained optimum, ``lam`` at a constrained one."""
    coeffs, exps = _stationarity_terms(platform, d, m)
    return math.fsum([c * f ** k for c, k in zip(coeffs, exps)] + [-platform.c3])


def stationarity_derivative(platform: Platform, d: float, m: int, f: float) -> float:
    coeffs, exps = _stationarity_terms(platform, d, m)
    return math.fsum([c * k * f ** (k - 1) for c, k in zip(coeffs, exps)])


def level_frequency(platform: Platform, d: float, m: int, lam: float) -> float:
    """Solve ``P_m(f) = lam`` for f > 0."""
    if lam < 0:
        raise ValueError(f"multiplier must be >= 0, got {lam!r}")
    rhs = platform.c3 + lam
    if rhs == 0:
        return 0.0
    coeffs, exps = _stationarity_terms(platform, d, m)
    return monomial_sum_root(coeffs, exps, rhs)


def unconstrained_level_frequency(platform: Platform, d: float, m: int) -> float:
    """Energy-minimizing frequency for ``m`` active cores with no deadline.

    Depends only on the platform and ``d``: the workload cancels out of the
    stationarity condition.
    """
    check_level(platform, m)
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d!r}")
    if platform.c3 == 0:
        raise NoInteriorMinimizer(
            "no interior minimizer: with c3 = 0 energy increases with f, "
            "so the unconstrained optimum is f -> 0")
    return level_frequency(platform, d, m, 0.0)


def _assignment(problem: DeadlineProblem, freqs: dict[int, float]) -> FrequencyAssignment:
    return FrequencyAssignment(
        tuple(freqs.get(m, UNUSED) for m in range(1, problem.platform.M + 1)))


def _result(problem, freqs, lam) -> OptimizationResult:
    f = _assignment(problem, freqs)
    return OptimizationResult(
        f=f,
        energy=total_energy(problem, f),
        time=completion_time(problem, f),
        deadline_binding=lam > 0,
        dual_multiplier=lam,
    )


def solve_constrained(
    problem: DeadlineProblem,
    *,
    f_cap: Optional[float] = None,
    rtol: float = 1e-13,
) -> OptimizationResult:
    """Minimize total energy subject to the deadline (dual bisection on ``lam``).

    ``f_cap`` optionally bounds every frequency from above.
    """
    p, d, w = problem.platform, problem.d, problem.w
    levels = w.active_levels()
    T = problem.t_budget
    floor = problem.memory_floor
    budget = problem.compute_budget
    if f_cap is not None:
        if not f_cap > 0:
            raise ValueError(f"frequency cap must be > 0, got {f_cap!r}")
        if math.fsum(w[m - 1] / f_cap for m in levels) > budget:
            raise InfeasibleDeadline(T, floor, f"unreachable with frequency cap {f_cap!r}")

    def clip(x):
        return x if f_cap is None else min(x, f_cap)

    def freqs_at(lam):
        return {m: clip(level_frequency(p, d, m, lam)) for m in levels}

    def compute_time(freqs):
        if any(freqs[m] == 0 for m in levels):
            return math.inf
        return math.fsum(w[m - 1] / freqs[m] for m in levels)

    if p.c3 > 0:
        free = freqs_at(0.0)
        if compute_time(free) <= budget:
            return _result(problem, free, 0.0)

    # uniform frequency F meets the deadline exactly; P_m(F) brackets lam
    F = math.fsum(w) / budget
    ps = [stationarity_polynomial(p, d, m, F) for m in levels]
    lo = max(0.0, min(ps))
    hi = max(max(ps), lo, 1e-300)
    while compute_time(freqs_at(hi)) > budget:
        hi *= 10.0
    while lo > 0 and compute_time(freqs_at(lo)) < budget:
        lo *= 0.1
        if lo < 1e-300:
            lo = 0.0

    def excess(lam):
        return compute_time(freqs_at(lam)) - budget

    def excess_slope(lam):
        # d(excess)/d(lam) = -sum w_m / (f_m**2 P_m'(f_m)), capped levels frozen
        fs = freqs_at(lam)
        terms = []
        for m in levels:
            f = fs[m]
            if f_cap is not None and f >= f_cap:
                continue
            terms.append(w[m - 1] / (f * f * stationarity_derivative(p, d, m, f)))
        return -math.fsum(terms)

    # excess is decreasing in lam; negate to get the increasing form
    lam = bracketed_newton(
        lambda x: -excess(x), lambda x: -excess_slope(x), lo, hi,
        coarse_rtol=1e-6, rtol=rtol)
    freqs = freqs_at(lam)
    # land on the feasible side when rounding left us a hair over
    if compute_time(freqs) > budget:
        for _ in range(64):
            lam *= 1.0 + 1e-14
            freqs = freqs_at(lam)
            if compute_time(freqs) <= budget:
                break
    return _result(problem, freqs, lam)


def ratio_relation_residual(
    platform: Platform, d: float, m: int, n: int, f_m: float, f_n: float
) -> float:
    """Normalized mismatch of the dynamic-energy optimality relation for a level pair.

    Zero when ``(m' (alpha - 1 + alpha d t_a f_m))**(1/alpha) f_m`` equals the
    same expression for ``n``.
    """
    if not (f_m > 0 and f_n > 0):
        raise ValueError("frequencies must be positive")
    a = platform.alpha
    s = d * platform.t_a
    left = (platform.effective_cores(m) * (a - 1 + a * s * f_m)) ** (1 / a) * f_m
    right = (platform.effective_cores(n) * (a - 1 + a * s * f_n)) ** (1 / a) * f_n
    return (left - right) / left


def ratio_bounds(platform: Platform, m: int, n: int) -> RatioBounds:
    """Where an optimal f_m / f_n must lie, for total and dynamic-only energy."""
    if m < n:
        raise ValueError(f"need m >= n, got m={m}, n={n}")
    q = platform.effective_cores(n) / platform.effective_cores(m)
    a = platform.alpha
    return RatioBounds(lower=q ** (1 / a), upper_total=1.0, upper_dynamic=q ** (1 / (a + 1)))


def overload_ratio(platform: Platform, m: int, g: float) -> float:
    """Positive root x of ``r g x^3 + r x^2 - (g + 1) = 0`` with ``r = m'/1'``."""
    if platform.alpha != 2:
        raise ValueError(f"the cubic ratio relation needs alpha == 2, got {platform.alpha!r}")
    if not g >= 0:
        raise ValueError(f"memory overload factor must be >= 0, got {g!r}")
    r = platform.effective_cores(m) / platform.effective_cores(1)
    if g == 0:
        return overload_limits(platform, m)[0]
    return monomial_sum_root((r * g, r), (3.0, 2.0), g + 1.0)


def cubic_ratio(platform: Platform, d: float, m: int, f_1: float) -> float:
    """Optimal f_m / f_1 (alpha = 2, dynamic energy) given the serial frequency."""
    if not f_1 > 0:
        raise ValueError(f"f_1 must be > 0, got {f_1!r}")
    if platform.alpha != 2:
        raise ValueError(f"the cubic ratio relation needs alpha == 2, got {platform.alpha!r}")
    return overload_ratio(platform, m, 2.0 * d * platform.t_a * f_1)


def overload_limits(platform: Platform, m: int) -> tuple[float, float]:
    """Ratio at zero overload and its limit as the overload grows without bound."""
    r = platform.effective_cores(m) / platform.effective_cores(1)
    return r ** -0.5, r ** (-1.0 / 3.0)


def sweep_ratio_vs_overload(
    platform: Platform, m: int, g_range: Sequence[float]
) -> list[tuple[float, float]]:
    return [(float(g), overload_ratio(platform, m, g)) for g in g_range]


def parallelism_weights(platform: Platform) -> list[float]:
    """``pi_m' = m'**(1/(alpha+1))`` for m = 1..M."""
    e = 1.0 / (platform.alpha + 1.0)
    return [platform.effective_cores(m) ** e for m in range(1, platform.M + 1)]


def reference_frequency_dynamic(problem: DeadlineProblem) -> float:
    """Smallest reference frequency meeting the deadline when f_m = f' / pi_m'."""
    pi = parallelism_weights(problem.platform)
    weighted = math.fsum(p * x for p, x in zip(pi, problem.w))
    return weighted / problem.compute_budget


def reference_assignment(problem: DeadlineProblem, f_ref: float) -> FrequencyAssignment:
    pi = parallelism_weights(problem.platform)
    return FrequencyAssignment(
        tuple(f_ref / p if x > 0 else UNUSED for p, x in zip(pi, problem.w)))


def _reference_energy_terms(problem: DeadlineProblem):
    p, w = problem.platform, problem.w
    s = problem.stall
    pi = parallelism_weights(p)
    A = p.c1 * s * math.fsum(q * x for q, x in zip(pi, w))
    B = p.c1 * math.fsum(q * q * x for q, x in zip(pi, w))
    C = p.c2 * s * math.fsum(x / q for q, x in zip(pi, w))
    D = p.c3 * math.fsum(x * q for q, x in zip(pi, w))
    const = (p.c2 + p.c3 * s) * math.fsum(w)
    return A, B, C, D, const


def reference_energy(problem: DeadlineProblem, f_ref: float) -> float:
    """Total energy as a function of the reference frequency alone."""
    A, B, C, D, const = _reference_energy_terms(problem)
    a = problem.platform.alpha
    return math.fsum((A * f_ref ** a, B * f_ref ** (a - 1), C * f_ref, D / f_ref, const))


def reference_frequency_total(problem: DeadlineProblem) -> float:
    """Reference frequency minimizing total energy, no lower than the deadline allows."""
    forced = reference_frequency_dynamic(problem)
    A, B, C, D, _ = _reference_energy_terms(problem)
    if D == 0:
        return forced
    a = problem.platform.alpha
    # derivative times f'^2: a A f^(a+1) + (a-1) B f^a + C f^2 - D
    free = monomial_sum_root((a * A, (a - 1) * B, C), (a + 1, a, 2.0), D)
    return max(free, forced)
