"""Bracketed root finding for increasing functions on f > 0."""

from __future__ import annotations

import math
from typing import Callable, Sequence


def bracketed_newton(
    func: Callable[[float], float],
    deriv: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    coarse_rtol: float = 1e-6,
    rtol: float = 1e-12,
    maxiter: int = 500,
) -> float:
    """Root of an increasing ``func`` with ``func(lo) <= 0 <= func(hi)``.

    Bisects (geometrically when ``lo > 0``) until the bracket is ``coarse_rtol``
    wide, then polishes with Newton steps that are never allowed to leave the
    current bracket.
    """
    if not lo <= hi:
        raise ValueError(f"bad bracket [{lo!r}, {hi!r}]")
    flo, fhi = func(lo), func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo < 0 < fhi):
        raise ValueError(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={flo!r}, f(hi)={fhi!r}")

    it = 0
    while hi - lo > coarse_rtol * hi and it < maxiter:
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        fm = func(mid)
        if fm == 0:
            return mid
        if fm < 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        it += 1

    x = 0.5 * (lo + hi)
    best, best_abs = min((lo, -flo), (hi, fhi), key=lambda p: p[1])
    for _ in range(maxiter):
        fx = func(x)
        if fx == 0:
            return x
        if abs(fx) < best_abs:
            best, best_abs = x, abs(fx)
        if fx < 0:
            lo = x
        else:
            hi = x
        dfx = deriv(x)
        step = fx / dfx if dfx > 0 else math.inf
        if abs(step) <= rtol * abs(x):
            # converged; a sub-tolerance step may not even be representable
            x_new = x - step
            if lo <= x_new <= hi:
                f_new = abs(func(x_new))
                if f_new < best_abs:
                    best, best_abs = x_new, f_new
            return best
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if hi - lo <= rtol * hi or not lo < x_new < hi:
            return best
        x = x_new
    return best


def monomial_sum_root(
    coeffs: Sequence[float],
    exponents: Sequence[float],
    rhs: float,
    **kwargs,
) -> float:
    """Unique positive root of ``sum_i a_i * f**k_i = rhs``.

    Requires ``a_i >= 0`` with at least one positive, ``k_i > 0`` and ``rhs > 0``.
    The left side is then strictly increasing from 0, and the root lies in
    ``[min_i (rhs/(n a_i))**(1/k_i), min_i (rhs/a_i)**(1/k_i)]`` where ``n`` is
    the number of positive terms.
    """
    terms = [(float(a), float(k)) for a, k in zip(coeffs, exponents) if a != 0]
    if any(a < 0 for a, _ in terms):
        raise ValueError("coefficients must be non-negative")
    if any(k <= 0 for _, k in terms):
        raise ValueError("exponents must be positive")
    if not terms:
        raise ValueError("at least one coefficient must be positive")
    if not rhs > 0:
        raise ValueError(f"right-hand side must be positive, got {rhs!r}")
    if len(terms) == 1:
        a, k = terms[0]
        return (rhs / a) ** (1.0 / k)

    n = len(terms)
    hi = min((rhs / a) ** (1.0 / k) for a, k in terms)
    lo = min((rhs / (n * a)) ** (1.0 / k) for a, k in terms)

    def func(f):
        return math.fsum([a * f ** k for a, k in terms]) - rhs

    def deriv(f):
        return math.fsum([a * k * f ** (k - 1) for a, k in terms])

    # the analytic bracket can miss by an ulp when one term dominates
    while func(hi) < 0:
        hi *= 2.0
    while lo > 0 and func(lo) > 0:
        lo *= 0.5
    return bracketed_newton(func, deriv, lo, hi, **kwargs)
