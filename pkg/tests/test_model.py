import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcsm.errors import ArgumentError
from rcsm.model import (IndexVector, NoiseModel, ReceivedSlot, SystemDims, bits_per_symbol,
                        draw_channel, im_bit_count, index_set_from_rank, qam_constellation,
                        rank_from_index_set, simulate_received_slot, transmit_slot)
from rcsm.numerics import RngStream


@pytest.mark.parametrize("order", [4, 16, 64])
def test_qam_unit_energy_and_distinct(order):
    c = qam_constellation(order)
    assert c.order == order and c.bits == int(math.log2(order))
    assert math.isclose(np.mean(np.abs(c.points) ** 2), 1.0, rel_tol=1e-12)
    assert len(set(np.round(c.points, 12))) == order


def test_qam_gray_neighbours_differ_in_one_bit():
    pts = qam_constellation(16).points
    dmin = min(abs(a - b) for a, b in itertools.combinations(pts, 2))
    for i, j in itertools.combinations(range(16), 2):
        if abs(abs(pts[i] - pts[j]) - dmin) < 1e-9:
            assert bin(i ^ j).count("1") == 1


def test_qam_rejects_unknown_order():
    with pytest.raises(ArgumentError):
        qam_constellation(8)


@pytest.mark.parametrize("L,K,bits", [(20, 2, 7), (10, 3, 6), (20, 4, 12), (4, 4, 0),
                                      (2, 1, 1)])
def test_im_bit_count(L, K, bits):
    assert im_bit_count(L, K) == bits
    assert 2 ** bits <= math.comb(L, K) < 2 ** (bits + 1)


def test_im_bit_count_large_exact():
    # floating log2 would round the wrong way on exact powers of two
    assert im_bit_count(64, 1) == 6
    assert im_bit_count(200, 100) == math.comb(200, 100).bit_length() - 1


def test_bits_per_symbol():
    assert bits_per_symbol(20, 2, 4, 4) == 2 * 2 + 7 / 4
    with pytest.raises(ArgumentError):
        bits_per_symbol(20, 2, 0, 4)


def test_rank_is_lexicographic():
    subsets = list(itertools.combinations(range(6), 3))
    for r, s in enumerate(subsets):
        assert index_set_from_rank(r, 6, 3).support == s


@given(L=st.integers(1, 30), data=st.data())
def test_rank_round_trip(L, data):
    K = data.draw(st.integers(1, L))
    r = data.draw(st.integers(0, math.comb(L, K) - 1))
    assert rank_from_index_set(index_set_from_rank(r, L, K)) == r


def test_rank_out_of_range():
    with pytest.raises(ArgumentError):
        index_set_from_rank(math.comb(5, 2), 5, 2)


def test_index_vector_validation_and_labels():
    x = IndexVector.from_labels(10, [10, 2, 6])
    assert x.support == (1, 5, 9) and x.labels() == (2, 6, 10) and x.K == 3
    assert IndexVector.from_bits(x.bits) == x
    for bad in [(), (2, 1), (1, 1), (0, 10)]:
        with pytest.raises(ArgumentError):
            IndexVector(10, bad)


def test_system_dims_and_noise():
    with pytest.raises(ArgumentError):
        SystemDims(L=3, N=2, K=4, M=1)
    n = NoiseModel.from_db(10)
    assert math.isclose(n.noise_variance, 0.1) and math.isclose(n.snr_db, 10)
    with pytest.raises(ArgumentError):
        NoiseModel(0.0)


def test_transmit_slot_support_and_alphabet():
    rng = RngStream(1)
    x = IndexVector(8, (1, 4))
    c = qam_constellation(4)
    slot = transmit_slot(x, c, 5, rng)
    assert slot.symbols.shape == (5, 8) and slot.M == 5
    assert np.all(slot.symbols[:, [0, 2, 3, 5, 6, 7]] == 0)
    assert all(np.min(np.abs(c.points - s)) < 1e-12 for s in slot.symbols[:, [1, 4]].ravel())


def test_received_slot_noiseless_limit_and_pairing():
    x = IndexVector(6, (0, 3))
    c = qam_constellation(4)

    def received(snr):
        rng = RngStream(3, 1)
        H = draw_channel(rng, 4, 6)
        slot = transmit_slot(x, c, 3, rng)
        return H, slot, simulate_received_slot(H, slot, NoiseModel(snr), rng)

    H, slot, y = received(1e12)
    assert np.allclose(y.observations, slot.symbols @ H.T, atol=1e-5)
    # unit noise is scaled, so the noise vectors at two SNRs are proportional
    n1 = received(1.0)[2].observations - slot.symbols @ H.T
    n2 = received(100.0)[2].observations - slot.symbols @ H.T
    assert np.allclose(n1, 10 * n2)


def test_channel_column_energy():
    H = draw_channel(RngStream(0), 40, 2000)
    assert abs(np.mean(np.sum(np.abs(H) ** 2, axis=0)) - 1) < 0.02


def test_received_slot_rejects_nan():
    with pytest.raises(ArgumentError):
        ReceivedSlot(np.array([[np.nan, 0]]))
