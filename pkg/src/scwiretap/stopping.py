"""
Stopping-set enumerators of {l1, l2, r, r} two-edge ensembles.

Everything is in natural logarithms.  ``p(x) = (1+x)^r - r x`` is the
generating function of check-socket subsets that avoid size one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from numba import njit
from scipy.optimize import brentq, minimize_scalar

from .errors import Indivisible, InvalidParams, OutOfRange, TooLarge
from .graphs import TannerGraph

MAX_EXHAUSTIVE_N = 28


@dataclass(frozen=True)
class GrowthRateQuery:
    """Degrees and normalized size for a growth-rate evaluation.

    Only positivity of the degrees and of the design rate is enforced; the
    linear-distance argument additionally needs l1 >= 3, which callers may
    check with ``has_linear_distance``.
    """

    l1: int
    l2: int
    r: int
    omega: float

    def __post_init__(self):
        if self.l1 < 1 or self.l2 < 0 or self.r < 2:
            raise InvalidParams(f"bad degrees {self}")
        if 1 - (self.l1 + self.l2) / self.r <= 0:
            raise InvalidParams("design rate 1 - (l1+l2)/r must be positive")
        if not 0.0 < self.omega < 1.0:
            raise OutOfRange(f"omega={self.omega} outside (0, 1)")

    @property
    def has_linear_distance(self) -> bool:
        return self.l1 >= 3


def p_poly(r: int, x) -> float:
    """(1+x)^r - r x in 50-digit arithmetic, returned as a float."""
    if x < 0:
        raise InvalidParams("x must be nonnegative")
    with mpmath.workdps(50):
        xm = mpmath.mpf(x)
        return float((1 + xm) ** r - r * xm)


def log_p(r: int, x: float) -> float:
    """ln p(x) without cancellation near x = 0 or overflow for large x."""
    if x < 1.0:
        tail = math.fsum(math.comb(r, k) * x**k for k in range(2, r + 1))
        return math.log1p(tail)
    return r * math.log1p(x) + math.log1p(-r * x * math.exp(-r * math.log1p(x)))


def _lhs(r: int, x: float) -> float:
    """x ((1+x)^(r-1) - 1) / p(x), the mean fraction of chosen sockets."""
    if x < 1.0:
        num = x * math.expm1((r - 1) * math.log1p(x))
        return num / math.exp(log_p(r, x))
    a = math.exp(-(r - 1) * math.log1p(x))
    b = r * x * math.exp(-r * math.log1p(x))
    return x / (1 + x) * (1 - a) / (1 - b)


def solve_t(r: int, omega: float) -> float:
    """Positive root of x ((1+x)^(r-1) - 1) / p(x) = omega.

    The left side rises from 0 at x = 0 to 1 as x grows, so every omega in
    (0, 1) has exactly one root.
    """
    if r < 2:
        raise InvalidParams("r must be >= 2")
    if not 0.0 < omega < 1.0:
        raise OutOfRange(f"omega={omega} outside (0, 1)")
    f = lambda u: _lhs(r, math.exp(u)) - omega
    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2
        if lo < -1400:
            raise OutOfRange(f"omega={omega} too small to bracket")
    while f(hi) < 0:
        hi *= 2
        if hi > 1400:
            raise OutOfRange(f"omega={omega} too close to 1 to bracket")
    grid = [_lhs(r, math.exp(u)) for u in np.linspace(lo, hi, 64)]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise OutOfRange("left side not monotone on the bracket")
    u = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(u)


def binary_entropy(w: float) -> float:
    if w <= 0.0 or w >= 1.0:
        return 0.0
    return -w * math.log(w) - (1 - w) * math.log1p(-w)


def growth_rate(q: GrowthRateQuery) -> float:
    """(1 - l1 - l2) h(w) + ((l1+l2)/r) ln p(t) - w (l1+l2) ln t, t = solve_t(r, w)."""
    l = q.l1 + q.l2
    t = solve_t(q.r, q.omega)
    return (1 - l) * binary_entropy(q.omega) + l / q.r * log_p(q.r, t) - q.omega * l * math.log(t)


def growth_rate_standard(l: int, r: int, omega: float) -> float:
    """Regular (l, r) growth rate in variational form.

    (1 - l) h(w) + (l/r) min_x [ln p(x) - r w ln x], minimized numerically over
    ln x without solving the stationarity equation.
    """
    if not 0.0 < omega < 1.0:
        raise OutOfRange(f"omega={omega} outside (0, 1)")
    obj = lambda u: log_p(r, math.exp(u)) - r * omega * u
    lo, hi = -1.0, 1.0
    while obj(lo - 1) < obj(lo):
        lo -= 2
    while obj(hi + 1) < obj(hi):
        hi += 2
    res = minimize_scalar(obj, bounds=(lo - 1, hi + 1), method="bounded",
                          options={"xatol": 1e-12, "maxiter": 2000})
    return (1 - l) * binary_entropy(omega) + l / r * res.fun


def first_zero(l1: int, l2: int, r: int, grid: int = 2000) -> float:
    """Smallest omega > 0 where the growth rate turns nonnegative."""
    ws = np.linspace(1e-6, 1 - 1e-6, grid)
    prev = ws[0]
    g_prev = growth_rate(GrowthRateQuery(l1, l2, r, prev))
    if g_prev >= 0:
        return 0.0
    for w in ws[1:]:
        g = growth_rate(GrowthRateQuery(l1, l2, r, float(w)))
        if g >= 0:
            return brentq(lambda z: growth_rate(GrowthRateQuery(l1, l2, r, z)), prev, float(w),
                          xtol=1e-14)
        prev = float(w)
    raise OutOfRange("growth rate never crosses zero")


# ---------------------------------------------------------------------------
# exact finite-n enumerator


@lru_cache(maxsize=256)
def _p_power(r: int, k: int) -> tuple[int, ...]:
    base = [1, 0] + [math.comb(r, j) for j in range(2, r + 1)]
    out = [1]
    for _ in range(k):
        nxt = [0] * (len(out) + len(base) - 1)
        for i, a in enumerate(out):
            if a:
                for j, b in enumerate(base):
                    nxt[i + j] += a * b
        out = nxt
    return tuple(out)


def _coef(r: int, k: int, m: int) -> int:
    c = _p_power(r, k)
    return c[m] if m < len(c) else 0


def mean_enumerator_exact(l1: int, l2: int, r: int, n: int, a: int) -> Fraction:
    """Expected number of size-a stopping sets in the configuration-model ensemble."""
    if (n * l1) % r or (n * l2) % r:
        raise Indivisible(f"n*l not divisible by r={r}")
    if not 0 <= a <= n:
        raise InvalidParams("a must lie in [0, n]")
    val = Fraction(math.comb(n, a))
    for l in (l1, l2):
        val *= Fraction(_coef(r, l * n // r, a * l), math.comb(l * n, a * l))
    return val


# ---------------------------------------------------------------------------
# exhaustive enumeration


@njit(cache=True)
def _gray_count(v_ptr, v_chk, num_checks, n, max_size):
    counts = np.zeros(max_size + 1, dtype=np.int64)
    hits = np.zeros(num_checks, dtype=np.int64)
    inset = np.zeros(n, dtype=np.bool_)
    ones = 0
    size = 0
    counts[0] = 1
    total = np.int64(1) << n
    for g in range(1, total):
        v = 0
        while ((g >> v) & 1) == 0:
            v += 1
        if inset[v]:
            inset[v] = False
            size -= 1
            for t in range(v_ptr[v], v_ptr[v + 1]):
                c = v_chk[t]
                if hits[c] == 1:
                    ones -= 1
                hits[c] -= 1
                if hits[c] == 1:
                    ones += 1
        else:
            inset[v] = True
            size += 1
            for t in range(v_ptr[v], v_ptr[v + 1]):
                c = v_chk[t]
                if hits[c] == 1:
                    ones -= 1
                hits[c] += 1
                if hits[c] == 1:
                    ones += 1
        if ones == 0 and size <= max_size:
            counts[size] += 1
    return counts


def enumerate_stopping_sets(g: TannerGraph, max_size: int | None = None) -> np.ndarray:
    """Exact stopping-set counts by size for one graph.

    Edges are counted with multiplicity, so a double edge into the set counts
    as two hits on that check.
    """
    if g.n > MAX_EXHAUSTIVE_N:
        raise TooLarge(f"n={g.n} > {MAX_EXHAUSTIVE_N}")
    max_size = g.n if max_size is None else min(max_size, g.n)
    m1 = len(g.type1)
    chk = np.concatenate([
        np.repeat(np.arange(m1), g.type1.degrees()),
        m1 + np.repeat(np.arange(len(g.type2)), g.type2.degrees()),
    ]).astype(np.int64)
    var = np.concatenate([g.type1.indices, g.type2.indices]).astype(np.int64)
    order = np.argsort(var, kind="stable")
    v_ptr = np.concatenate([[0], np.cumsum(np.bincount(var, minlength=g.n))]).astype(np.int64)
    return _gray_count(v_ptr, chk[order], m1 + len(g.type2), g.n, max_size)
