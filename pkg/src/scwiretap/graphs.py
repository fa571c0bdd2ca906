"""
Sampling finite Tanner graphs from two-edge-type ensembles.

Three constructions are provided:

* ``sample_uncoupled``: configuration model, one uniform socket matching per
  edge type.
* ``sample_smoothed``: the coupled ensemble with smoothing width ``w``.  Every
  type-j edge of a variable at position i lands on a check at position
  i + k with k in 0..w-1.
* ``sample_chain``: the protograph chain where a variable at position i sends
  one type-j edge to each check position i-s..i+s, lifted M-fold with an
  independent permutation per (check position, offset, type).

Multi-edges are kept in the graph; they cancel mod 2 when exported to a
parity-check matrix.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Optional, TextIO

import numpy as np

from .ensembles import EnsembleParams, Variant, chain_span, check_chain_degrees
from .errors import Indivisible, InvalidParams, ProfileRounding
from .gf2 import BitMatrix

FORMAT_VERSION = "scwiretap-graph v1"


@dataclass(frozen=True)
class CheckBlock:
    """CSR adjacency of one check type: neighbours of check k are
    ``indices[indptr[k]:indptr[k+1]]`` (sorted, repeats kept)."""

    indptr: np.ndarray
    indices: np.ndarray
    pos: np.ndarray

    def __len__(self) -> int:
        return len(self.indptr) - 1

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, k: int) -> np.ndarray:
        return self.indices[self.indptr[k] : self.indptr[k + 1]]

    def __iter__(self) -> Iterator[np.ndarray]:
        for k in range(len(self)):
            yield self.neighbors(k)

    @classmethod
    def from_edges(cls, check: np.ndarray, var: np.ndarray, num_checks: int,
                   pos: Optional[np.ndarray] = None) -> "CheckBlock":
        check = np.asarray(check, dtype=np.int64)
        var = np.asarray(var, dtype=np.int64)
        order = np.lexsort((var, check))
        counts = np.bincount(check, minlength=num_checks)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        if pos is None:
            pos = np.zeros(num_checks, dtype=np.int64)
        return cls(indptr, var[order], np.asarray(pos, dtype=np.int64))

    def drop_empty(self) -> "CheckBlock":
        deg = self.degrees()
        keep = deg > 0
        if keep.all():
            return self
        indptr = np.concatenate([[0], np.cumsum(deg[keep])]).astype(np.int64)
        return CheckBlock(indptr, self.indices, self.pos[keep])


@dataclass(frozen=True)
class TannerGraph:
    n: int
    var_pos: np.ndarray
    type1: CheckBlock
    type2: CheckBlock

    def block(self, j: int) -> CheckBlock:
        return self.type1 if j == 1 else self.type2

    def variable_degrees(self, j: int) -> np.ndarray:
        return np.bincount(self.block(j).indices, minlength=self.n)


# ---------------------------------------------------------------------------
# socket matching helpers


def _capacities(sockets: int, r: int) -> np.ndarray:
    """Split ``sockets`` into ceil(sockets / r) checks with near-equal degrees."""
    if sockets == 0:
        return np.zeros(0, dtype=np.int64)
    m = -(-sockets // r)
    q, rem = divmod(sockets, m)
    return np.array([q + 1] * rem + [q] * (m - rem), dtype=np.int64)


def _match(stubs: np.ndarray, capacities: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform injection of ``stubs`` into the check sockets; returns a check per stub."""
    owner = np.repeat(np.arange(len(capacities)), capacities)
    if len(stubs) > len(owner):
        raise InvalidParams("more edges than check sockets")
    return owner[rng.permutation(len(owner))[: len(stubs)]]


def sample_uncoupled(p: EnsembleParams, n: int, rng: np.random.Generator) -> TannerGraph:
    blocks = []
    for l, r in ((p.l1, p.r1), (p.l2, p.r2)):
        if (n * l) % r:
            raise Indivisible(f"n*l={n * l} not divisible by r={r}")
        sockets = rng.permutation(n * l)
        var = np.repeat(np.arange(n), l)
        check = np.empty(n * l, dtype=np.int64)
        check[sockets] = np.arange(n * l) // r
        blocks.append(CheckBlock.from_edges(check, var, n * l // r))
    return TannerGraph(n, np.zeros(n, dtype=np.int64), blocks[0], blocks[1])


# ---------------------------------------------------------------------------
# smoothed coupled ensemble


def _profiles(l: int, w: int) -> list[tuple[tuple[int, ...], float]]:
    """Every w-tuple t summing to l with p(t) = multinomial(l; t) / w**l."""
    out = []
    for t in itertools.product(range(l + 1), repeat=w):
        if sum(t) != l:
            continue
        ways = math.factorial(l)
        for c in t:
            ways //= math.factorial(c)
        out.append((t, ways / w**l))
    return out


def _largest_remainder(weights: np.ndarray, total: int) -> tuple[np.ndarray, bool]:
    raw = weights * total
    base = np.floor(raw + 1e-9).astype(np.int64)
    exact = bool(np.allclose(raw, np.round(raw), atol=1e-9))
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
    return base, exact


def _offsets_balanced(M: int, l: int, w: int, rng) -> np.ndarray:
    if (M * l) % w:
        raise InvalidParams(f"balanced mode needs w | M*l (M={M}, l={l}, w={w})")
    offsets = np.repeat(np.arange(w), M * l // w)
    return offsets[rng.permutation(M * l)].reshape(M, l)


def _offsets_strict(M: int, p: EnsembleParams, rng) -> tuple[np.ndarray, np.ndarray, bool]:
    """Per-variable constellations from rounded profile-pair counts."""
    prof1, prof2 = _profiles(p.l1, p.w), _profiles(p.l2, p.w)
    pairs = [(t1, t2) for t1, _ in prof1 for t2, _ in prof2]
    weights = np.array([q1 * q2 for _, q1 in prof1 for _, q2 in prof2])
    counts, exact = _largest_remainder(weights, M)
    assigned = np.repeat(np.arange(len(pairs)), counts)[rng.permutation(M)]
    c1 = np.empty((M, p.l1), dtype=np.int64)
    c2 = np.empty((M, p.l2), dtype=np.int64)
    for v, k in enumerate(assigned):
        t1, t2 = pairs[k]
        c1[v] = rng.permutation(np.repeat(np.arange(p.w), t1))
        c2[v] = rng.permutation(np.repeat(np.arange(p.w), t2))
    return c1, c2, exact


def sample_smoothed(p: EnsembleParams, rng: np.random.Generator,
                    mode: str = "balanced") -> TannerGraph:
    """Sample the smoothed coupled ensemble.

    ``mode="balanced"`` gives each offset 0..w-1 exactly M*l_j/w of the type-j
    edges leaving every variable position, so interior check positions receive
    exactly M*l_j edges.  ``mode="strict"`` assigns constellations from the
    profile-pair counts M p1(t1) p2(t2), rounded by largest remainder when not
    integral (a ``ProfileRounding`` warning is issued in that case).
    ``mode="iid"`` draws every edge offset independently and uniformly.

    When a check position receives more than M*l_j edges (possible in the
    strict and iid modes) extra checks are opened and ``ProfileRounding`` is
    warned.

    Check positions run over [-L, L+w-1] with ceil(M*l_j/r_j) checks each.  When
    r_j does not divide M*l_j the per-check capacities differ by at most one.
    Checks that receive no edge are dropped.
    """
    if p.variant is not Variant.SMOOTHED or p.L is None or p.w is None or p.M is None:
        raise InvalidParams("smoothed sampling needs L, w and M")
    if p.w > 2 * p.L:
        raise InvalidParams(f"w={p.w} exceeds 2L={2 * p.L}")
    L, w, M = p.L, p.w, p.M
    npos = 2 * L + 1
    n = M * npos
    var_pos = np.repeat(np.arange(-L, L + 1), M)

    offs1 = np.empty((n, p.l1), dtype=np.int64)
    offs2 = np.empty((n, p.l2), dtype=np.int64)
    rounded = False
    for k in range(npos):
        sl = slice(k * M, (k + 1) * M)
        if mode == "balanced":
            offs1[sl] = _offsets_balanced(M, p.l1, w, rng)
            offs2[sl] = _offsets_balanced(M, p.l2, w, rng) if p.l2 else offs2[sl]
        elif mode == "iid":
            offs1[sl] = rng.integers(0, w, size=(M, p.l1))
            offs2[sl] = rng.integers(0, w, size=(M, p.l2))
        elif mode == "strict":
            c1, c2, exact = _offsets_strict(M, p, rng)
            offs1[sl], offs2[sl] = c1, c2
            rounded |= not exact
        else:
            raise InvalidParams(f"unknown mode {mode!r}")
    if rounded:
        warnings.warn("profile counts M*p1*p2 are not integral; rounded", ProfileRounding,
                      stacklevel=2)

    blocks = []
    for offs, l, r in ((offs1, p.l1, p.r1), (offs2, p.l2, p.r2)):
        blocks.append(_attach_checks(var_pos, offs, l, r, M, -L, L + w - 1, rng))
    return TannerGraph(n, var_pos, blocks[0], blocks[1])


def _attach_checks(var_pos, offs, l, r, M, lo_pos, hi_pos, rng) -> CheckBlock:
    """Match edges (variable v -> check position var_pos[v] + offs[v, e]) into checks."""
    n = len(var_pos)
    var = np.repeat(np.arange(n), l)
    cpos = (var_pos[:, None] + offs).reshape(-1)
    order = np.argsort(cpos, kind="stable")
    var, cpos = var[order], cpos[order]
    base_caps = _capacities(M * l, r)
    checks, edges_c, edges_v, pos = 0, [], [], []
    bounds = np.searchsorted(cpos, np.arange(lo_pos, hi_pos + 2))
    overflow = False
    for k, c in enumerate(range(lo_pos, hi_pos + 1)):
        stub_vars = var[bounds[k] : bounds[k + 1]]
        caps = base_caps
        if len(stub_vars) > caps.sum():
            extra = len(stub_vars) - int(caps.sum())
            caps = np.concatenate([caps, _capacities(extra, r)])
            overflow = True
        local = _match(stub_vars, caps, rng)
        edges_c.append(local + checks)
        edges_v.append(stub_vars)
        pos.append(np.full(len(caps), c))
        checks += len(caps)
    if overflow:
        warnings.warn("check position received more than M*l edges; extra checks added",
                      ProfileRounding, stacklevel=3)
    block = CheckBlock.from_edges(
        np.concatenate(edges_c) if edges_c else np.zeros(0, np.int64),
        np.concatenate(edges_v) if edges_v else np.zeros(0, np.int64),
        checks,
        np.concatenate(pos) if pos else np.zeros(0, np.int64),
    )
    return block.drop_empty()


# ---------------------------------------------------------------------------
# protograph chain


def sample_chain(p: EnsembleParams, rng: np.random.Generator) -> TannerGraph:
    """Lifted chain: checks of type j sit at positions [-L-s_j, L+s_j].

    A check takes r_j/l_j edges from each neighbouring variable position, so
    every check with at least one neighbour in [-L, L] is connected and
    interior checks have degree exactly r_j.
    """
    check_chain_degrees(p)
    if p.M is None:
        raise InvalidParams("chain sampling needs M")
    L, M = p.L, p.M
    n = M * (2 * L + 1)
    var_pos = np.repeat(np.arange(-L, L + 1), M)
    blocks = []
    for l, r in ((p.l1, p.r1), (p.l2, p.r2)):
        s = chain_span(l)
        b = r // l
        if M % b:
            raise Indivisible(f"M={M} not divisible by r/l={b}")
        per_pos = M // b
        cks, vs, pos = [], [], []
        for ci, c in enumerate(range(-L - s, L + s + 1)):
            for d in range(-s, s + 1):
                i = c - d
                if not -L <= i <= L:
                    continue
                perm = rng.permutation(M)
                vs.append((i + L) * M + np.arange(M))
                cks.append(ci * per_pos + perm // b)
            pos.append(np.full(per_pos, c))
        num = (2 * L + 2 * s + 1) * per_pos
        blocks.append(CheckBlock.from_edges(np.concatenate(cks), np.concatenate(vs), num,
                                            np.concatenate(pos)))
    return TannerGraph(n, var_pos, blocks[0], blocks[1])


def sample_graph(p: EnsembleParams, rng: np.random.Generator, mode: str = "balanced") -> TannerGraph:
    if p.variant is Variant.CHAIN:
        return sample_chain(p, rng)
    if p.L is None:
        if p.M is None:
            raise InvalidParams("uncoupled sampling needs M as the blocklength")
        return sample_uncoupled(p, p.M, rng)
    return sample_smoothed(p, rng, mode)


# ---------------------------------------------------------------------------
# export


def _block_matrix(block: CheckBlock, n: int) -> BitMatrix:
    rows = np.repeat(np.arange(len(block)), block.degrees())
    return BitMatrix.from_coo(rows, block.indices, len(block), n)


def to_parity_matrices(g: TannerGraph) -> tuple[BitMatrix, BitMatrix]:
    """``(H1, H2)``: one row per check of each type, multi-edges reduced mod 2."""
    return _block_matrix(g.type1, g.n), _block_matrix(g.type2, g.n)


def write_graph(g: TannerGraph, fh: TextIO) -> None:
    """Text export: version comment, ``n m1 m2``, then ``type row degree v...`` per check."""
    fh.write(f"# {FORMAT_VERSION}\n")
    fh.write(f"{g.n} {len(g.type1)} {len(g.type2)}\n")
    for j in (1, 2):
        for k, nb in enumerate(g.block(j)):
            fh.write(" ".join(map(str, [j, k, len(nb), *nb.tolist()])) + "\n")


def read_graph(fh: TextIO) -> TannerGraph:
    lines = [ln for ln in (s.strip() for s in fh) if ln and not ln.startswith("#")]
    n, m1, m2 = map(int, lines[0].split())
    edges = {1: ([], []), 2: ([], [])}
    for ln in lines[1:]:
        parts = list(map(int, ln.split()))
        j, k, d = parts[:3]
        if len(parts) != 3 + d:
            raise ValueError(f"degree mismatch in line {ln!r}")
        edges[j][0].extend([k] * d)
        edges[j][1].extend(parts[3:])
    b1 = CheckBlock.from_edges(np.array(edges[1][0]), np.array(edges[1][1]), m1)
    b2 = CheckBlock.from_edges(np.array(edges[2][0]), np.array(edges[2][1]), m2)
    return TannerGraph(n, np.zeros(n, dtype=np.int64), b1, b2)
