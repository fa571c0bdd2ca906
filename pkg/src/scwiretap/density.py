"""
Density evolution over the BEC for coupled two-edge-type ensembles.

States hold variable-to-check erasure probabilities at the variable positions
-L..L only; positions outside that range are implicitly zero.  Powers are
taken by repeated multiplication in a fixed order so that the two-edge
recursion with r1 == r2 and equal type states reproduces the merged
single-system recursion bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .ensembles import EnsembleParams, Variant, chain_span, check_chain_degrees
from .errors import InvalidParams


@dataclass
class DEState:
    """Erasure probabilities for both edge types.

    For the smoothed variant ``x1``/``x2`` have shape ``(2L+1,)``; for the chain
    variant they have shape ``(2L+1, l_j)``, one column per edge offset
    ``-s..s``.
    """

    x1: np.ndarray
    x2: np.ndarray
    L: int
    iteration: int = 0

    @property
    def positions(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    def max_erasure(self) -> float:
        m = 0.0
        for x in (self.x1, self.x2):
            if x.size:
                m = max(m, float(x.max()))
        return m


@dataclass(frozen=True)
class DEConfig:
    eps: float = 0.5
    max_iters: int = 100_000
    tol: float = 1e-12
    target_bit_er: float = 1e-10

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise InvalidParams("eps outside [0, 1]")
        if self.tol <= 0 or self.target_bit_er < 0 or self.max_iters < 1:
            raise InvalidParams("bad convergence settings")


@dataclass
class DEResult:
    converged_to_zero: bool
    residual: np.ndarray
    iters: int
    status: str  # "converged", "fixed_point" or "max_iters"
    state: object = None


def _pow(base: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(base)
    for _ in range(k):
        out = out * base
    return out


def _times_pow(out: np.ndarray, base: np.ndarray, k: int) -> np.ndarray:
    for _ in range(k):
        out = out * base
    return out


def _coupled_factor(x: np.ndarray, w: int, r: int) -> np.ndarray:
    """1 - (1/w) sum_p (1 - (1/w) sum_k x_{i+p-k})^(r-1) for every variable i."""
    ones = np.ones(w)
    inner = np.convolve(x, ones) / w  # check positions -L .. L+w-1
    q = _pow(1.0 - inner, r - 1)
    return 1.0 - np.convolve(q, ones, mode="valid") / w


def _validate_smoothed(p: EnsembleParams):
    if p.variant is not Variant.SMOOTHED:
        raise InvalidParams("expected the smoothed variant")
    if p.L is None or p.w is None:
        raise InvalidParams("smoothed DE needs L and w")


def initial_state(p: EnsembleParams, eps: float) -> DEState:
    n = 2 * p.L + 1
    if p.variant is Variant.CHAIN:
        return DEState(np.full((n, p.l1), eps), np.full((n, p.l2), eps), p.L)
    return DEState(np.full(n, float(eps)), np.full(n, float(eps)), p.L)


def de_step_smoothed(s: DEState, p: EnsembleParams, eps: float) -> DEState:
    _validate_smoothed(p)
    f1 = _coupled_factor(s.x1, p.w, p.r1)
    f2 = _coupled_factor(s.x2, p.w, p.r2)
    base = np.full(s.x1.shape, float(eps))
    x1 = _times_pow(_times_pow(base, f1, p.l1 - 1), f2, p.l2)
    if p.l2 > 0:
        x2 = _times_pow(_times_pow(base, f1, p.l1), f2, p.l2 - 1)
    else:
        x2 = np.zeros_like(x1)
    return DEState(x1, x2, s.L, s.iteration + 1)


def de_step_single(x: np.ndarray, l: int, r: int, L: int, w: int, eps: float) -> np.ndarray:
    """Merged recursion x_i <- eps * factor_i^(l-1) for the (l, r, L, w) ensemble."""
    if l < 1 or r < 1 or w < 1 or L < 0:
        raise InvalidParams("bad single-system parameters")
    if x.shape != (2 * L + 1,):
        raise InvalidParams("state length must be 2L+1")
    f = _coupled_factor(x, w, r)
    return _times_pow(np.full(x.shape, float(eps)), f, l - 1)


def _chain_check(v: np.ndarray, r: int, l: int) -> np.ndarray:
    """Check-to-variable erasure probabilities on every chain edge of one type.

    ``v[i, a]`` is the message from variable position i on its edge towards
    check position i + (a - s).  Each check takes r/l edges from each of its
    l neighbouring variable positions.
    """
    s = chain_span(l)
    b = r // l
    n = v.shape[0]
    keep = 1.0 - v
    pad = np.ones((n + 4 * s, l))
    pad[2 * s : 2 * s + n] = keep
    u = np.empty_like(v)
    for a in range(l):
        prod = _pow(keep[:, a], b - 1)
        for a2 in range(l):
            if a2 == a:
                continue
            start = 2 * s + (a - a2)
            prod = prod * _pow(pad[start : start + n, a2], b)
        u[:, a] = 1.0 - prod
    return u


def de_step_chain(s: DEState, p: EnsembleParams, eps: float) -> DEState:
    check_chain_degrees(p)
    u1 = _chain_check(s.x1, p.r1, p.l1)
    u2 = _chain_check(s.x2, p.r2, p.l2)
    incoming = np.concatenate([u1, u2], axis=1)
    n, d = incoming.shape
    out = np.empty_like(incoming)
    for e in range(d):
        prod = np.full(n, float(eps))
        for e2 in range(d):
            if e2 != e:
                prod = prod * incoming[:, e2]
        out[:, e] = prod
    return DEState(out[:, : p.l1], out[:, p.l1 :], s.L, s.iteration + 1)


def de_step(s: DEState, p: EnsembleParams, eps: float) -> DEState:
    if p.variant is Variant.CHAIN:
        return de_step_chain(s, p, eps)
    return de_step_smoothed(s, p, eps)


def _iterate(step, state, measure, cfg: DEConfig, on_iter=None):
    prev = measure(state)
    for it in range(1, cfg.max_iters + 1):
        state = step(state)
        cur = measure(state)
        if on_iter is not None:
            on_iter(it, state)
        if cur.max(initial=0.0) < cfg.target_bit_er:
            return DEResult(True, cur, it, "converged", state)
        if np.max(np.abs(cur - prev), initial=0.0) < cfg.tol:
            return DEResult(False, cur, it, "fixed_point", state)
        prev = cur
    return DEResult(False, prev, cfg.max_iters, "max_iters", state)


def _flatten(s: DEState) -> np.ndarray:
    return np.concatenate([s.x1.reshape(-1), s.x2.reshape(-1)])


def run_de(p: EnsembleParams, cfg: DEConfig, on_iter: Optional[Callable] = None) -> DEResult:
    """Iterate from the all-eps state until convergence, a fixed point or max_iters.

    ``converged_to_zero`` is set when every erasure probability drops below
    ``cfg.target_bit_er``.  ``residual`` holds the final x1 and x2 flattened.
    """
    if p.variant is Variant.CHAIN:
        check_chain_degrees(p)
    else:
        _validate_smoothed(p)
    state = initial_state(p, cfg.eps)
    return _iterate(lambda s: de_step(s, p, cfg.eps), state, _flatten, cfg, on_iter)


def run_de_single(l: int, r: int, L: int, w: int, cfg: DEConfig,
                  on_iter: Optional[Callable] = None) -> DEResult:
    x0 = np.full(2 * L + 1, float(cfg.eps))
    return _iterate(lambda x: de_step_single(x, l, r, L, w, cfg.eps), x0, lambda x: x, cfg, on_iter)


@dataclass(frozen=True)
class ThresholdBracket:
    lo: float
    hi: float
    probes: int
    iterations: int

    @property
    def threshold(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _bisect(run: Callable[[float], DEResult], precision: float) -> ThresholdBracket:
    if precision <= 0:
        raise InvalidParams("precision must be positive")
    lo, hi = 0.0, 1.0
    probes = iters = 0
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        res = run(mid)
        probes += 1
        iters += res.iters
        if res.converged_to_zero:
            lo = mid
        else:
            hi = mid
    return ThresholdBracket(lo, hi, probes, iters)


def threshold_bracket(p: EnsembleParams, cfg: DEConfig, precision: float) -> ThresholdBracket:
    return _bisect(lambda e: run_de(p, replace(cfg, eps=e)), precision)


def bp_threshold(p: EnsembleParams, cfg: DEConfig, precision: float) -> float:
    """Largest eps for which DE reaches zero, located by bisection on [0, 1]."""
    return threshold_bracket(p, cfg, precision).threshold


def threshold_bracket_single(l: int, r: int, L: int, w: int, cfg: DEConfig,
                             precision: float) -> ThresholdBracket:
    return _bisect(lambda e: run_de_single(l, r, L, w, replace(cfg, eps=e)), precision)


def bp_threshold_single(l: int, r: int, L: int, w: int, cfg: DEConfig, precision: float) -> float:
    return threshold_bracket_single(l, r, L, w, cfg, precision).threshold
