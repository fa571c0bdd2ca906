"""
Dense GF(2) linear algebra on packed bit rows.

Rows are stored as little-endian ``uint64`` words: column ``j`` lives in word
``j // 64`` at bit ``j % 64``.  Elimination inserts rows one at a time into a
basis keyed by each row's lowest set column, XOR-ing only the words between
the current leading word and the basis row's last nonzero word.  On banded
parity-check matrices this keeps the cost close to linear in the number of
rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from numba import njit

from .errors import Inconsistent, ShapeError

WORD = 64
_ONE = np.uint64(1)


def _nwords(cols: int) -> int:
    return max(1, (cols + WORD - 1) // WORD)


@njit(cache=True)
def _ctz(x):
    n = 0
    while (x & np.uint64(0xFF)) == np.uint64(0):
        x >>= np.uint64(8)
        n += 8
    while (x & np.uint64(1)) == np.uint64(0):
        x >>= np.uint64(1)
        n += 1
    return n


@njit(cache=True)
def _parity(x):
    x ^= x >> np.uint64(32)
    x ^= x >> np.uint64(16)
    x ^= x >> np.uint64(8)
    x ^= x >> np.uint64(4)
    x ^= x >> np.uint64(2)
    x ^= x >> np.uint64(1)
    return np.uint8(x & np.uint64(1))


@njit(cache=True)
def _reduce_rows(words, rhs, ncols):
    m, nw = words.shape
    cap = min(m, ncols)
    basis = np.zeros((cap, nw), dtype=np.uint64)
    brhs = np.zeros(cap, dtype=np.uint8)
    pivots = np.empty(cap, dtype=np.int64)
    last = np.empty(cap, dtype=np.int64)
    slot = np.full(ncols, -1, dtype=np.int64)
    accepted = np.zeros(m, dtype=np.bool_)
    row = np.empty(nw, dtype=np.uint64)
    inconsistent = False
    k = 0
    for i in range(m):
        for t in range(nw):
            row[t] = words[i, t]
        b = rhs[i]
        hi = nw - 1
        while hi >= 0 and row[hi] == np.uint64(0):
            hi -= 1
        lo = 0
        while True:
            while lo <= hi and row[lo] == np.uint64(0):
                lo += 1
            if lo > hi:
                if b != 0:
                    inconsistent = True
                break
            c = lo * 64 + _ctz(row[lo])
            s = slot[c]
            if s < 0:
                for t in range(lo, hi + 1):
                    basis[k, t] = row[t]
                brhs[k] = b
                pivots[k] = c
                last[k] = hi
                slot[c] = k
                accepted[i] = True
                k += 1
                break
            e = last[s]
            for t in range(lo, e + 1):
                row[t] ^= basis[s, t]
            b ^= brhs[s]
            if e > hi:
                hi = e
            while hi >= lo and row[hi] == np.uint64(0):
                hi -= 1
    return k, basis[:k], brhs[:k], pivots[:k], accepted, inconsistent


@njit(cache=True)
def _back_substitute(basis, brhs, pivots, x):
    k, nw = basis.shape
    order = np.argsort(pivots)
    for j in range(k - 1, -1, -1):
        idx = order[j]
        p = pivots[idx]
        acc = np.uint64(0)
        for t in range(p // 64, nw):
            acc ^= basis[idx, t] & x[t]
        if (_parity(acc) ^ brhs[idx]) != 0:
            x[p // 64] |= np.uint64(1) << np.uint64(p % 64)


@njit(cache=True)
def _gather_columns(words, cols, out):
    m = words.shape[0]
    for t in range(cols.shape[0]):
        c = cols[t]
        w = c // 64
        b = np.uint64(c % 64)
        tw = t // 64
        tb = np.uint64(1) << np.uint64(t % 64)
        for i in range(m):
            if (words[i, w] >> b) & np.uint64(1):
                out[i, tw] |= tb


@njit(cache=True)
def _row_supports(words, ncols):
    m, nw = words.shape
    counts = np.zeros(m + 1, dtype=np.int64)
    for i in range(m):
        c = 0
        for t in range(nw):
            x = words[i, t]
            while x != np.uint64(0):
                x &= x - np.uint64(1)
                c += 1
        counts[i + 1] = counts[i] + c
    indices = np.empty(counts[m], dtype=np.int64)
    for i in range(m):
        p = counts[i]
        for t in range(nw):
            x = words[i, t]
            while x != np.uint64(0):
                indices[p] = t * 64 + _ctz(x)
                x &= x - np.uint64(1)
                p += 1
    return counts, indices


def _pack_bits(bits: np.ndarray, cols: int) -> np.ndarray:
    """Pack an ``(m, cols)`` 0/1 array into ``(m, nwords)`` uint64 words."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    m = bits.shape[0]
    nw = _nwords(cols)
    padded = np.zeros((m, nw * WORD), dtype=np.uint8)
    padded[:, :cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64).reshape(m, nw)


def _unpack_bits(words: np.ndarray, cols: int) -> np.ndarray:
    m = words.shape[0]
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8).reshape(m, words.shape[1] * 8)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :cols]


class BitMatrix:
    """Immutable binary matrix with packed row storage."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, words: np.ndarray, rows: int, cols: int):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.shape != (rows, _nwords(cols)):
            raise ShapeError(f"word array {words.shape} does not fit {rows}x{cols}")
        tail = cols % WORD
        if tail and rows and np.any(words[:, -1] >> np.uint64(tail)):
            raise ValueError("bits beyond the last column must be zero")
        words.flags.writeable = False
        object.__setattr__(self, "rows", int(rows))
        object.__setattr__(self, "cols", int(cols))
        object.__setattr__(self, "words", words)

    def __setattr__(self, name, value):
        raise AttributeError("BitMatrix is immutable")

    # construction ------------------------------------------------------

    @classmethod
    def from_dense(cls, a) -> "BitMatrix":
        a = np.asarray(a)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2:
            raise ShapeError("expected a 2-d array")
        rows, cols = a.shape
        return cls(_pack_bits(a.astype(np.uint8) & 1, cols), rows, cols)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(np.zeros((rows, _nwords(cols)), dtype=np.uint64), rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_supports(cls, supports: Iterable[Sequence[int]], cols: int) -> "BitMatrix":
        """Build from per-row column lists; repeated columns cancel mod 2."""
        row_idx, col_idx = [], []
        for i, sup in enumerate(supports):
            sup = np.asarray(sup, dtype=np.int64)
            row_idx.append(np.full(sup.shape, i, dtype=np.int64))
            col_idx.append(sup)
        rows = len(row_idx)
        if rows == 0:
            return cls.zeros(0, cols)
        return cls.from_coo(np.concatenate(row_idx), np.concatenate(col_idx), rows, cols)

    @classmethod
    def from_coo(cls, row_idx, col_idx, rows: int, cols: int) -> "BitMatrix":
        row_idx = np.asarray(row_idx, dtype=np.int64)
        col_idx = np.asarray(col_idx, dtype=np.int64)
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= cols):
            raise IndexError("column index out of range")
        words = np.zeros((rows, _nwords(cols)), dtype=np.uint64)
        bits = np.left_shift(_ONE, (col_idx % WORD).astype(np.uint64))
        np.bitwise_xor.at(words, (row_idx, col_idx // WORD), bits)
        return cls(words, rows, cols)

    # views -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def to_dense(self) -> np.ndarray:
        return _unpack_bits(self.words, self.cols)

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    T = property(transpose)

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise ShapeError("column counts differ")
        return BitMatrix(np.vstack([self.words, other.words]), self.rows + other.rows, self.cols)

    def take_rows(self, idx) -> "BitMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return BitMatrix(self.words[idx], len(idx), self.cols)

    def select_columns(self, cols) -> "BitMatrix":
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        if cols.size and (cols.min() < 0 or cols.max() >= self.cols):
            raise IndexError("column index out of range")
        out = np.zeros((self.rows, _nwords(len(cols))), dtype=np.uint64)
        if self.rows and cols.size:
            _gather_columns(self.words, cols, out)
        return BitMatrix(out, self.rows, len(cols))

    def supports(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices)`` of the nonzero columns of every row."""
        return _row_supports(self.words, self.cols)

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.uint8).reshape(-1)
        if x.shape[0] != self.cols:
            raise ShapeError(f"vector length {x.shape[0]} != {self.cols} columns")
        xp = _pack_bits(x.reshape(1, -1), self.cols)[0]
        return (np.bitwise_count(self.words & xp).sum(axis=1) & 1).astype(np.uint8)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class RowEchelonResult:
    """Echelon basis of a row space, rows ordered by strictly increasing pivot.

    ``independent_rows`` lists the input rows that entered the basis under
    greedy in-order insertion; ``rhs`` carries the transformed right-hand side
    when one was supplied.
    """

    rank: int
    pivot_cols: tuple[int, ...]
    transformed: BitMatrix
    rhs: np.ndarray
    independent_rows: np.ndarray
    consistent: bool = True


def row_echelon(m: BitMatrix, b=None) -> RowEchelonResult:
    if b is None:
        rhs = np.zeros(m.rows, dtype=np.uint8)
    else:
        rhs = np.asarray(b, dtype=np.uint8).reshape(-1) & 1
        if rhs.shape[0] != m.rows:
            raise ShapeError(f"rhs length {rhs.shape[0]} != {m.rows} rows")
    if m.rows == 0 or m.cols == 0:
        return RowEchelonResult(
            0, (), BitMatrix.zeros(0, m.cols), np.zeros(0, np.uint8),
            np.zeros(0, np.int64), not rhs.any(),
        )
    k, basis, brhs, pivots, accepted, bad = _reduce_rows(m.words, rhs, m.cols)
    order = np.argsort(pivots, kind="stable")
    return RowEchelonResult(
        rank=int(k),
        pivot_cols=tuple(int(p) for p in pivots[order]),
        transformed=BitMatrix(basis[order], int(k), m.cols),
        rhs=brhs[order].copy(),
        independent_rows=np.flatnonzero(accepted),
        consistent=not bad,
    )


def rank(m: BitMatrix) -> int:
    return row_echelon(m).rank


def rank_of_columns(m: BitMatrix, cols) -> int:
    """Rank of the submatrix formed by the columns in ``cols``."""
    cols = np.asarray(sorted(set(int(c) for c in np.asarray(cols).reshape(-1))), dtype=np.int64)
    if cols.size and (cols[0] < 0 or cols[-1] >= m.cols):
        raise IndexError("column index out of range")
    if cols.size == 0:
        return 0
    return rank(m.select_columns(cols))


def _solve(a: BitMatrix, b, free_bits: Optional[np.ndarray]) -> Optional[np.ndarray]:
    ech = row_echelon(a, b)
    if not ech.consistent:
        return None
    x = np.zeros(_nwords(a.cols), dtype=np.uint64)
    if free_bits is not None:
        x = _pack_bits(free_bits.reshape(1, -1), a.cols)[0].copy()
        for p in ech.pivot_cols:
            x[p // WORD] &= ~(_ONE << np.uint64(p % WORD))
    if ech.rank:
        _back_substitute(ech.transformed.words, ech.rhs, np.asarray(ech.pivot_cols, np.int64), x)
    return _unpack_bits(x.reshape(1, -1), a.cols)[0].copy()


def solve_affine(a: BitMatrix, b) -> Optional[np.ndarray]:
    """Some ``x`` with ``a @ x = b`` (free variables set to 0), or ``None``."""
    return _solve(a, b, None)


def sample_solution(a: BitMatrix, b, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random solution of ``a @ x = b``.

    Free columns get independent fair bits and pivot columns are fixed by back
    substitution, which is a bijection onto the solution set.
    """
    free = rng.integers(0, 2, size=a.cols, dtype=np.uint8)
    x = _solve(a, b, free)
    if x is None:
        raise Inconsistent("system has no solution")
    return x


def nullspace_dim(m: BitMatrix) -> int:
    return m.cols - rank(m)
