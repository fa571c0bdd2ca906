import io
import pathlib
import warnings

import numpy as np
import pytest

from scwiretap.ensembles import EnsembleParams, Variant, nominal_rate_chain
from scwiretap.errors import Indivisible, InvalidParams, ProfileRounding
from scwiretap.gf2 import rank
from scwiretap.graphs import (
    CheckBlock,
    TannerGraph,
    read_graph,
    sample_chain,
    sample_graph,
    sample_smoothed,
    sample_uncoupled,
    to_parity_matrices,
    write_graph,
)
from scwiretap.rng import derive_seed, make_rng
from scwiretap.wiretap import peel_decode, transmit_bec

GOLDEN = pathlib.Path(__file__).parent / "golden"


def edge_positions(g: TannerGraph, j: int):
    b = g.block(j)
    cpos = np.repeat(b.pos, b.degrees())
    return g.var_pos[b.indices], cpos


def test_uncoupled_counts():
    g = sample_uncoupled(EnsembleParams(3, 3, 6, 6), 6, make_rng(1))
    assert len(g.type1) == 3 and len(g.type2) == 3
    assert np.all(g.variable_degrees(1) + g.variable_degrees(2) == 6)
    g = sample_uncoupled(EnsembleParams(3, 3, 6, 12), 12, make_rng(1))
    assert len(g.type1) == 6 and len(g.type2) == 3
    with pytest.raises(Indivisible):
        sample_uncoupled(EnsembleParams(3, 3, 6, 12), 10, make_rng(1))


def test_uncoupled_check_degrees_exact():
    rng = make_rng(2)
    for _ in range(1000):
        g = sample_uncoupled(EnsembleParams(3, 2, 6, 4), 12, rng)
        assert np.all(g.type1.degrees() == 6) and np.all(g.type2.degrees() == 4)


@pytest.mark.parametrize("mode", ["balanced", "iid"])
def test_smoothed_structure(mode):
    p = EnsembleParams(3, 3, 6, 6, L=5, w=3, M=12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProfileRounding)
        g = sample_smoothed(p, make_rng(3), mode=mode)
    assert g.n == 12 * 11
    for j in (1, 2):
        assert np.all(g.variable_degrees(j) == 3)
        vp, cp = edge_positions(g, j)
        d = cp - vp
        assert d.min() >= 0 and d.max() <= 2
        assert np.all(g.block(j).degrees() <= 6) if mode == "balanced" else True
    assert g.var_pos.min() == -5 and g.var_pos.max() == 5


def test_smoothed_interior_checks_full():
    p = EnsembleParams(3, 3, 6, 6, L=5, w=3, M=12)
    g = sample_smoothed(p, make_rng(4))
    for j in (1, 2):
        b = g.block(j)
        interior = (b.pos >= -5 + 2) & (b.pos <= 5)
        assert np.all(b.degrees()[interior] == 6)
        assert np.all(b.degrees() >= 1)


def test_w1_is_block_diagonal():
    p = EnsembleParams(3, 3, 6, 6, L=3, w=2, M=8)
    g = sample_smoothed(EnsembleParams(3, 3, 6, 6, L=3, w=1, M=8), make_rng(5))
    for j in (1, 2):
        vp, cp = edge_positions(g, j)
        assert np.array_equal(vp, cp)
        assert np.all(g.block(j).degrees() == 6)
    assert p.n == g.n


def test_right_end_spreads_outward():
    p = EnsembleParams(2, 1, 6, 6, L=4, w=3, M=12)
    g = sample_smoothed(p, make_rng(6))
    vp, cp = edge_positions(g, 1)
    assert np.all(cp[vp == 4] >= 4)


def test_offset_histogram_uniform():
    """Chi-square on the pooled edge offsets of the i.i.d. sampler."""
    p = EnsembleParams(3, 2, 6, 6, L=4, w=4, M=10)
    rng = make_rng(7)
    counts = np.zeros(4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProfileRounding)
        for _ in range(200):
            g = sample_smoothed(p, rng, mode="iid")
            for j in (1, 2):
                vp, cp = edge_positions(g, j)
                counts += np.bincount(cp - vp, minlength=4)
    exp = counts.sum() / 4
    assert ((counts - exp) ** 2 / exp).sum() < 16.27  # 99.9%, 3 dof


def test_strict_mode_rounding_warns():
    p = EnsembleParams(2, 1, 6, 6, L=2, w=2, M=6)
    with pytest.warns(ProfileRounding):
        g = sample_smoothed(p, make_rng(8), mode="strict")
    assert np.all(g.variable_degrees(1) == 2) and np.all(g.variable_degrees(2) == 1)
    # M = 8: M * p1(t1) * p2(t2) = 8 * (1/4 or 1/2) * 1/2 is integral
    q = EnsembleParams(2, 1, 6, 6, L=2, w=2, M=8)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ProfileRounding)
        sample_smoothed(q, make_rng(8), mode="strict")


def test_smoothed_errors():
    with pytest.raises(InvalidParams):
        sample_smoothed(EnsembleParams(3, 3, 6, 6, L=1, w=3, M=6), make_rng(0))
    with pytest.raises(InvalidParams):
        sample_smoothed(EnsembleParams(3, 3, 6, 6, L=3, w=2, M=5), make_rng(0))
    with pytest.raises(InvalidParams):
        sample_smoothed(EnsembleParams(3, 3, 6, 6, L=3, w=2, M=6), make_rng(0), mode="nope")


def test_chain_structure_and_counts():
    L, M = 5, 16
    p = EnsembleParams(3, 3, 6, 12, L=L, variant=Variant.CHAIN, M=M)
    g = sample_chain(p, make_rng(9))
    assert np.all(g.variable_degrees(1) == 3) and np.all(g.variable_degrees(2) == 3)
    assert g.type2.pos.min() == -L - 1 and g.type2.pos.max() == L + 1
    assert len(g.type2) == M * (2 * L + 3) // 4
    assert len(g.type2) / g.n == pytest.approx(nominal_rate_chain(p))
    interior1 = (g.type1.pos >= -L + 1) & (g.type1.pos <= L - 1)
    assert np.all(g.type1.degrees()[interior1] == 6)
    for j in (1, 2):
        vp, cp = edge_positions(g, j)
        assert np.abs(cp - vp).max() <= 1


def test_chain_L0_tiny():
    p = EnsembleParams(3, 3, 6, 12, L=0, variant=Variant.CHAIN, M=4)
    g = sample_chain(p, make_rng(10))
    assert g.n == 4
    # type-1: 3 positions x 2 checks, each check takes 2 edges from position 0
    assert len(g.type1) == 6 and np.all(g.type1.degrees() == 2)
    assert len(g.type2) == 3 and np.all(g.type2.degrees() == 4)
    with pytest.raises(Indivisible):
        sample_chain(EnsembleParams(3, 3, 6, 12, L=0, variant=Variant.CHAIN, M=6), make_rng(0))


def test_parity_matrices_mod2():
    b = CheckBlock.from_edges(np.array([0, 0, 0]), np.array([0, 1, 1]), 1)
    empty = CheckBlock.from_edges(np.zeros(0, np.int64), np.zeros(0, np.int64), 0)
    g = TannerGraph(4, np.zeros(4, np.int64), b, empty)
    h1, h2 = to_parity_matrices(g)
    assert h1.to_dense().tolist() == [[1, 0, 0, 0]]
    assert h2.shape == (0, 4)
    g0 = TannerGraph(3, np.zeros(3, np.int64), empty, empty)
    assert to_parity_matrices(g0)[0].shape == (0, 3)


def test_row_weights_bounded():
    p = EnsembleParams(3, 3, 6, 12, L=4, w=2, M=24)
    g = sample_smoothed(p, make_rng(11))
    h1, h2 = to_parity_matrices(g)
    assert h1.row_weights().max() <= 6 and h2.row_weights().max() <= 12


def test_merged_types_match_single_profile():
    p = EnsembleParams(2, 1, 6, 6, L=4, w=3, M=12)
    g = sample_smoothed(p, make_rng(12))
    deg = g.variable_degrees(1) + g.variable_degrees(2)
    assert np.all(deg == 3)


def test_reproducible():
    p = EnsembleParams(3, 3, 6, 12, L=3, variant="chain", M=8)
    a, b = io.StringIO(), io.StringIO()
    write_graph(sample_graph(p, make_rng(derive_seed(5, 0))), a)
    write_graph(sample_graph(p, make_rng(derive_seed(5, 0))), b)
    assert a.getvalue() == b.getvalue()


@pytest.mark.parametrize("name,p,seed", [
    ("uncoupled_3_3_6_6_n6_seed11.txt", EnsembleParams(3, 3, 6, 6, M=6), 11),
    ("smoothed_2_1_6_6_L2_w2_M4_seed12.txt", EnsembleParams(2, 1, 6, 6, L=2, w=2, M=4), 12),
    ("chain_3_3_6_12_L1_M4_seed13.txt", EnsembleParams(3, 3, 6, 12, L=1, variant="chain", M=4), 13),
])
def test_golden_files(name, p, seed):
    buf = io.StringIO()
    write_graph(sample_graph(p, make_rng(seed)), buf)
    assert buf.getvalue() == (GOLDEN / name).read_text()


def test_text_roundtrip():
    p = EnsembleParams(3, 3, 6, 6, L=2, w=2, M=4)
    g = sample_smoothed(p, make_rng(14))
    buf = io.StringIO()
    write_graph(g, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("#") and lines[1] == f"{g.n} {len(g.type1)} {len(g.type2)}"
    for ln in lines[2:]:
        parts = list(map(int, ln.split()))
        assert parts[2] == len(parts) - 3 and parts[3:] == sorted(parts[3:])
    buf.seek(0)
    h = read_graph(buf)
    assert to_parity_matrices(h) == to_parity_matrices(g)


def test_chain_full_code_peeling_tracks_de_threshold():
    """Full-code peeling on {3,3,6,12,L=20} succeeds below the 0.741 DE threshold and fails above it."""
    p = EnsembleParams(3, 3, 6, 12, L=20, variant="chain", M=1600)
    rng = make_rng(15)
    res = {}
    for eps in (0.70, 0.77):
        ok = 0
        for _ in range(4):
            g = sample_chain(p, rng)
            h1, h2 = to_parity_matrices(g)
            y, _ = transmit_bec(np.zeros(g.n, np.uint8), eps, rng)
            ok += peel_decode(h1.vstack(h2), y).resolved
        res[eps] = ok
    assert res[0.70] >= 3 and res[0.77] == 0


def test_full_rank_blocks_typical():
    g = sample_chain(EnsembleParams(3, 3, 6, 12, L=4, variant="chain", M=16), make_rng(16))
    h1, h2 = to_parity_matrices(g)
    assert rank(h1) <= h1.rows and rank(h1.vstack(h2)) >= rank(h1)
