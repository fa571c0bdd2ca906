"""
Finite-length wiretap experiments over erasure channels.

A coset code is given by two parity blocks ``H1`` and ``H2``.  Legitimate
codewords satisfy ``H1 x = 0``; the secret is the syndrome of ``x`` under a
fixed set of ``H2`` rows that are independent of ``H1``.  Bob decodes by
peeling on ``H1``; Eve's uncertainty is computed exactly from GF(2) ranks.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Iterable, Optional, TextIO

import numpy as np
from numba import njit

from .ensembles import (
    EnsembleParams,
    Variant,
    WiretapChannelSpec,
    design_rate_wiretap,
    nominal_rate_chain,
)
from .errors import Inconsistent, InvalidParams, ShapeError, TooLarge
from .gf2 import BitMatrix, rank_of_columns, row_echelon, sample_solution, solve_affine
from .graphs import sample_graph, to_parity_matrices
from .rng import derive_seed, make_rng

log = logging.getLogger(__name__)

ERASED = -1
ML_MAX_N = 64


class CosetCode:
    """Coset code defined by ``(H1, H2)``.

    ``secret_rows`` are the ``H2`` rows kept by greedy in-order insertion after
    all of ``H1``; they are independent modulo the row space of ``H1`` and
    define the message map ``s = H2[secret_rows] x``.  The map depends only on
    the matrices, never on a seed.
    """

    def __init__(self, H1: BitMatrix, H2: BitMatrix):
        if H1.cols != H2.cols:
            raise ShapeError(f"column mismatch: {H1.cols} vs {H2.cols}")
        self.H1 = H1
        self.H2 = H2
        self.n = H1.cols
        ech1 = row_echelon(H1)
        ech = row_echelon(H1.vstack(H2))
        self.rank1 = ech1.rank
        self.rank12 = ech.rank
        rows = ech.independent_rows
        self.secret_rows = rows[rows >= H1.rows] - H1.rows
        assert len(self.secret_rows) == self.rank12 - self.rank1

    @property
    def secret_dim(self) -> int:
        return self.rank12 - self.rank1

    @property
    def rate(self) -> float:
        return self.secret_dim / self.n if self.n else 0.0

    @cached_property
    def H(self) -> BitMatrix:
        return self.H1.vstack(self.H2)

    @cached_property
    def secret_matrix(self) -> BitMatrix:
        return self.H2.take_rows(self.secret_rows)

    @cached_property
    def encode_matrix(self) -> BitMatrix:
        return self.H1.vstack(self.secret_matrix)


def secret_of(code: CosetCode, x) -> np.ndarray:
    return code.secret_matrix.matvec(x)


def encode(code: CosetCode, s, rng: np.random.Generator) -> np.ndarray:
    """Uniform ``x`` with ``H1 x = 0`` and ``secret_of(code, x) = s``."""
    s = np.asarray(s, dtype=np.uint8).reshape(-1)
    if s.shape[0] != code.secret_dim:
        raise ShapeError(f"secret length {s.shape[0]} != secret_dim {code.secret_dim}")
    rhs = np.concatenate([np.zeros(code.H1.rows, dtype=np.uint8), s & 1])
    return sample_solution(code.encode_matrix, rhs, rng)


@dataclass(frozen=True)
class ErasurePattern:
    erased: np.ndarray
    n: int

    def __post_init__(self):
        e = np.asarray(self.erased, dtype=np.int64)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise IndexError("erasure index out of range")
        object.__setattr__(self, "erased", np.unique(e))

    def __len__(self) -> int:
        return int(self.erased.size)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.erased] = True
        return m


def transmit_bec(x, eps: float, rng: np.random.Generator) -> tuple[np.ndarray, ErasurePattern]:
    """Erase each bit independently with probability ``eps``; erased entries are -1."""
    if not 0.0 <= eps <= 1.0:
        raise InvalidParams(f"eps={eps} outside [0, 1]")
    x = np.asarray(x, dtype=np.int8).reshape(-1)
    hit = rng.random(x.shape[0]) < eps
    y = x.copy()
    y[hit] = ERASED
    return y, ErasurePattern(np.flatnonzero(hit), x.shape[0])


# ---------------------------------------------------------------------------
# peeling


@njit(cache=True)
def _peel(c_ptr, c_idx, v_ptr, v_idx, y):
    m = len(c_ptr) - 1
    x = y.copy()
    count = np.zeros(m, dtype=np.int64)
    acc = np.zeros(m, dtype=np.int8)
    for c in range(m):
        for t in range(c_ptr[c], c_ptr[c + 1]):
            v = c_idx[t]
            if x[v] < 0:
                count[c] += 1
            else:
                acc[c] ^= x[v]
    stack = np.empty(m, dtype=np.int64)
    top = 0
    for c in range(m):
        if count[c] == 1:
            stack[top] = c
            top += 1
    while top > 0:
        top -= 1
        c = stack[top]
        if count[c] != 1:
            continue
        u = -1
        for t in range(c_ptr[c], c_ptr[c + 1]):
            if x[c_idx[t]] < 0:
                u = c_idx[t]
                break
        x[u] = acc[c]
        for t in range(v_ptr[u], v_ptr[u + 1]):
            d = v_idx[t]
            count[d] -= 1
            acc[d] ^= x[u]
            if count[d] == 1:
                stack[top] = d
                top += 1
    bad = False
    for c in range(m):
        if count[c] == 0 and acc[c] != 0:
            bad = True
    return x, bad


def _adjacency(h: BitMatrix):
    c_ptr, c_idx = h.supports()
    order = np.argsort(c_idx, kind="stable")
    rows = np.repeat(np.arange(h.rows), np.diff(c_ptr))
    v_ptr = np.concatenate([[0], np.cumsum(np.bincount(c_idx, minlength=h.cols))]).astype(np.int64)
    return c_ptr.astype(np.int64), c_idx.astype(np.int64), v_ptr, rows[order].astype(np.int64)


@dataclass
class PeelResult:
    status: str  # "resolved" or "stuck"
    x: np.ndarray
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    @property
    def resolved(self) -> bool:
        return self.status == "resolved"


def _as_received(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int8).reshape(-1)
    if y.shape[0] != n:
        raise ShapeError(f"received length {y.shape[0]} != {n}")
    return y


def peel_decode(h: BitMatrix, y) -> PeelResult:
    """Iterative erasure decoding on the checks of ``h``.

    Returns the completed word, or the residual erased set, which is a stopping
    set of ``h``.  Raises ``Inconsistent`` when a fully known check fails.
    """
    y = _as_received(y, h.cols)
    x, bad = _peel(*_adjacency(h), y)
    if bad:
        raise Inconsistent("received bits violate a parity check")
    residual = np.flatnonzero(x < 0)
    return PeelResult("resolved" if residual.size == 0 else "stuck", x, residual)


def is_stopping_set(h: BitMatrix, subset) -> bool:
    """True when no row of ``h`` meets ``subset`` in exactly one column."""
    subset = np.asarray(subset, dtype=np.int64).reshape(-1)
    if subset.size == 0:
        return True
    hits = h.select_columns(subset).row_weights()
    return not np.any(hits == 1)


def ml_decode(h: BitMatrix, y) -> Optional[np.ndarray]:
    """Unique completion of ``y`` under ``h``, or None if erasures are ambiguous."""
    y = _as_received(y, h.cols)
    erased = np.flatnonzero(y < 0)
    if erased.size == 0:
        return y.astype(np.uint8)
    known = np.flatnonzero(y >= 0)
    if rank_of_columns(h, erased) < erased.size:
        return None
    syn = h.select_columns(known).matvec(y[known]) if known.size else np.zeros(h.rows, np.uint8)
    sol = solve_affine(h.select_columns(erased), syn)
    if sol is None:
        raise Inconsistent("received bits violate a parity check")
    x = y.astype(np.uint8)
    x[erased] = sol
    return x


@dataclass
class BobResult:
    ok: bool
    s_hat: Optional[np.ndarray]
    x_hat: Optional[np.ndarray]
    method: str  # "peel", "ml" or "failed"


def bob_decode(code: CosetCode, y, ml_fallback: bool = False) -> BobResult:
    pr = peel_decode(code.H1, y)
    if pr.resolved:
        x = pr.x.astype(np.uint8)
        return BobResult(True, secret_of(code, x), x, "peel")
    if ml_fallback:
        if code.n > ML_MAX_N:
            raise TooLarge(f"ML fallback limited to n <= {ML_MAX_N}")
        x = ml_decode(code.H1, y)
        if x is not None:
            return BobResult(True, secret_of(code, x), x, "ml")
    return BobResult(False, None, None, "failed")


# ---------------------------------------------------------------------------
# equivocation


@dataclass(frozen=True)
class Equivocation:
    """Single-pattern entropies in bits."""

    H_X_given_Z: int
    H_X_given_SZ: int
    H_S_given_Z: int
    n: int
    erased: int


def exact_equivocation(code: CosetCode, pattern: ErasurePattern) -> Equivocation:
    e = pattern.erased
    r1 = rank_of_columns(code.H1, e)
    r12 = rank_of_columns(code.H, e)
    k = len(e)
    out = Equivocation(k - r1, k - r12, r12 - r1, code.n, k)
    assert out.H_S_given_Z == out.H_X_given_Z - out.H_X_given_SZ
    return out


@dataclass
class EquivocationReport:
    n: int
    trials: int
    H_S_given_Z: np.ndarray
    H_X_given_Z: np.ndarray
    H_X_given_SZ: np.ndarray

    @classmethod
    def from_trials(cls, items: Iterable[Equivocation]) -> "EquivocationReport":
        items = list(items)
        if not items:
            raise InvalidParams("no trials")
        n = items[0].n
        return cls(
            n, len(items),
            np.array([e.H_S_given_Z for e in items]),
            np.array([e.H_X_given_Z for e in items]),
            np.array([e.H_X_given_SZ for e in items]),
        )

    def mean(self, name: str = "H_S_given_Z") -> float:
        return float(np.mean(getattr(self, name)))

    def stderr(self, name: str = "H_S_given_Z") -> float:
        v = getattr(self, name)
        return float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0


# ---------------------------------------------------------------------------
# campaigns


@dataclass
class TrialRecord:
    trial: int
    seed: int
    n: int
    secret_dim: int
    erased_count_bob: int
    erased_count_eve: int
    bob_ok: bool
    H_S_given_Z: int
    H_X_given_Z: int
    H_X_given_SZ: int
    error: Optional[str] = None


@dataclass
class CampaignSummary:
    L: Optional[int]
    M: Optional[int]
    trials: int
    R_nominal: float
    R_actual_mean: float
    Pe_bob: float
    Re_mean: float
    Re_stderr: float
    errors: int
    records: list = field(default_factory=list, repr=False)

    CSV_COLUMNS = ("L", "M", "trials", "R_nominal", "R_actual_mean", "Pe_bob", "Re_mean", "Re_stderr")


def nominal_rate(p: EnsembleParams) -> float:
    if p.variant is Variant.CHAIN:
        return nominal_rate_chain(p)
    if p.L is None:
        return p.l2 / p.r2
    return design_rate_wiretap(p)


def _run_trial(args) -> TrialRecord:
    index, seed, p, ch, fixed = args
    rng = make_rng(seed)
    try:
        code = fixed if fixed is not None else CosetCode(*to_parity_matrices(sample_graph(p, rng)))
        s = rng.integers(0, 2, size=code.secret_dim, dtype=np.uint8)
        x = encode(code, s, rng)
        y_bob, pat_bob = transmit_bec(x, ch.eps_m, rng)
        _, pat_eve = transmit_bec(x, ch.eps_w, rng)
        bob = bob_decode(code, y_bob)
        if bob.ok and not np.array_equal(bob.s_hat, s):
            raise AssertionError("peeling returned a wrong secret")
        eq = exact_equivocation(code, pat_eve)
        return TrialRecord(index, seed, code.n, code.secret_dim, len(pat_bob), len(pat_eve),
                           bob.ok, eq.H_S_given_Z, eq.H_X_given_Z, eq.H_X_given_SZ)
    except Exception as exc:  # one bad trial must not sink the campaign
        log.warning("trial %d (seed %d) failed: %r", index, seed, exc)
        return TrialRecord(index, seed, 0, 0, 0, 0, False, 0, 0, 0, error=repr(exc))


def run_campaign(p: EnsembleParams, ch: WiretapChannelSpec, trials: int, seed: int,
                 jobs: int = 1, fixed_code: Optional[CosetCode] = None) -> CampaignSummary:
    """Monte Carlo over ``trials`` independent trials.

    Trial ``t`` uses the stream ``derive_seed(seed, t)`` for the graph sample,
    the secret, the encoder and both channels, so results do not depend on
    ``jobs`` or scheduling.  Trials that raise are logged and excluded from the
    averages.
    """
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    tasks = [(t, derive_seed(seed, t), p, ch, fixed_code) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            recs = list(ex.map(_run_trial, tasks, chunksize=max(1, trials // (4 * jobs))))
    else:
        recs = [_run_trial(t) for t in tasks]
    recs.sort(key=lambda r: r.trial)
    return summarize(p, recs)


def summarize(p: EnsembleParams, recs: list[TrialRecord]) -> CampaignSummary:
    good = [r for r in recs if r.error is None]
    errors = len(recs) - len(good)
    if good:
        re = np.array([r.H_S_given_Z / r.n for r in good])
        ra = np.array([r.secret_dim / r.n for r in good])
        pe = float(np.mean([not r.bob_ok for r in good]))
        re_se = float(np.std(re, ddof=1) / math.sqrt(len(re))) if len(re) > 1 else 0.0
        re_mean, ra_mean = float(re.mean()), float(ra.mean())
    else:
        re_mean = ra_mean = pe = re_se = float("nan")
    return CampaignSummary(p.L, p.M, len(recs), nominal_rate(p), ra_mean, pe, re_mean, re_se,
                           errors, recs)


def write_jsonl(recs: Iterable[TrialRecord], fh: TextIO) -> None:
    for r in recs:
        fh.write(json.dumps(asdict(r)) + "\n")


def write_summary_csv(summaries: Iterable[CampaignSummary], fh: TextIO) -> None:
    w = csv.writer(fh)
    w.writerow(CampaignSummary.CSV_COLUMNS)
    for s in summaries:
        w.writerow([s.L, s.M, s.trials] + [f"{getattr(s, c):.12g}" for c in CampaignSummary.CSV_COLUMNS[3:]])
