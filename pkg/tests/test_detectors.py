import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcsm import kernels
from rcsm.detectors import (cavi_detect, correlator_detect, correlator_energies, covariance,
                            exact_mixture_loglik, exact_mixture_ml_detect, gauss_approx_metric,
                            ml_ga_detect, pairwise_hamming, top_k)
from rcsm.errors import ArgumentError, CapacityError
from rcsm.model import (IndexVector, NoiseModel, ReceivedSlot, draw_channel,
                        index_set_from_rank, qam_constellation, simulate_received_slot,
                        transmit_slot)
from rcsm.numerics import RngStream

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def instance(seed, N, L, K, M, snr_db=10.0, order=4):
    rng = RngStream(seed, 0)
    H = draw_channel(rng, N, L)
    x = index_set_from_rank(int(rng.integers(math.comb(L, K))), L, K)
    slot = transmit_slot(x, qam_constellation(order), M, rng)
    noise = NoiseModel.from_db(snr_db)
    return H, x, simulate_received_slot(H, slot, noise, rng), noise


def brute_force_metrics(H, y, K, noise):
    L = H.shape[1]
    return np.array([gauss_approx_metric(H, y, index_set_from_rank(r, L, K), noise)
                     for r in range(math.comb(L, K))])


# correlator ---------------------------------------------------------------

def test_correlator_orthonormal_noiseless():
    H = np.eye(4, dtype=complex)
    y = ReceivedSlot(np.array([[0, 0, 1 + 1j, 0]]))
    assert correlator_detect(H, y, 1).estimate.labels() == (3,)


def test_correlator_matches_naive_loop():
    H, _, y, _ = instance(1, 6, 9, 2, 3)
    Y = y.observations
    naive = [sum(abs(np.vdot(H[:, l], Y[m])) ** 2 for m in range(3)) for l in range(9)]
    assert np.allclose(correlator_energies(H, y), naive, rtol=1e-10)


def test_correlator_k_equals_l_and_ties():
    H, _, y, _ = instance(2, 4, 5, 5, 2)
    assert correlator_detect(H, y, 5).estimate.support == (0, 1, 2, 3, 4)
    assert top_k([1.0, 3.0, 3.0, 3.0], 2).support == (1, 2)


# Gaussian-approximation metric ---------------------------------------------

def test_metric_zero_support_closed_form():
    H, _, y, noise = instance(3, 5, 6, 2, 3)
    Y = y.observations
    expect = noise.snr * np.sum(np.abs(Y) ** 2) + 3 * 5 * math.log(noise.noise_variance)
    assert math.isclose(gauss_approx_metric(H, y, np.zeros(6), noise), expect, rel_tol=1e-12)


def test_metric_zero_observation_is_logdet():
    H, x, _, noise = instance(4, 5, 6, 2, 3)
    y = ReceivedSlot(np.zeros((3, 5)))
    R = covariance(H, x, noise)
    assert math.isclose(gauss_approx_metric(H, y, x, noise), 3 * np.linalg.slogdet(R)[1],
                        rel_tol=1e-12)


def test_metric_matches_eigendecomposition():
    H, x, y, noise = instance(5, 8, 10, 3, 4)
    w, V = np.linalg.eigh(covariance(H, x, noise))
    Z = y.observations @ V.conj()
    expect = np.sum(np.abs(Z) ** 2 / w) + 4 * np.sum(np.log(w))
    assert abs(gauss_approx_metric(H, y, x, noise) - expect) < 1e-8 * abs(expect)


# ML-GA ----------------------------------------------------------------------

def test_mlga_two_candidates():
    H = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
    y = ReceivedSlot(np.array([[1.0, 0.0]]))
    assert ml_ga_detect(H, y, 1, NoiseModel(1e3)).estimate.labels() == (1,)


def test_mlga_duplicate_columns_tie_goes_to_first():
    rng = RngStream(6)
    h = draw_channel(rng, 4, 1)
    H = np.hstack([h, h, draw_channel(rng, 4, 1)])
    y = ReceivedSlot(np.outer([1.0, -1.0], h[:, 0]))
    for method in ("covariance", "gram"):
        assert ml_ga_detect(H, y, 1, NoiseModel(100.0), method=method).estimate.support == (0,)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("method", ["covariance", "gram"])
@pytest.mark.parametrize("N,L,K,M", [(6, 7, 1, 2), (6, 7, 3, 2), (5, 5, 5, 1), (8, 10, 4, 3),
                                     (4, 9, 2, 2)])
def test_mlga_matches_brute_force(backend, method, N, L, K, M):
    H, _, y, noise = instance(N * 100 + L * 10 + K, N, L, K, M, snr_db=5)
    module = kernels.get_backend(backend)
    search = module.mlga_search if method == "covariance" else module.mlga_search_gram
    table = np.empty(math.comb(L, K))
    rank, support, metric = search(np.ascontiguousarray(H), y.observations,
                                   noise.noise_variance, K, table)
    brute = brute_force_metrics(H, y, K, noise)
    assert np.allclose(table, brute, rtol=1e-10, atol=1e-10)
    assert rank == int(np.argmin(brute))
    assert support == index_set_from_rank(rank, L, K).support
    assert math.isclose(metric, brute.min(), rel_tol=1e-10)


def test_mlga_methods_agree_on_decisions():
    for seed in range(40):
        H, _, y, noise = instance(seed, 12, 10, 3, 2, snr_db=3)
        a = ml_ga_detect(H, y, 3, noise, method="covariance")
        b = ml_ga_detect(H, y, 3, noise, method="gram")
        assert a.estimate == b.estimate


def test_mlga_capacity_and_arguments():
    H, _, y, noise = instance(7, 4, 30, 2, 1)
    with pytest.raises(CapacityError):
        ml_ga_detect(H, y, 2, noise, cap=100)
    with pytest.raises(ArgumentError):
        ml_ga_detect(H, y, 2, noise, method="qr")
    with pytest.raises(ArgumentError):
        ml_ga_detect(H, y, 0, noise)


# exact mixture -------------------------------------------------------------

def test_exact_mixture_hand_evaluation():
    H, x, y, noise = instance(8, 3, 2, 1, 1)
    c = qam_constellation(4)
    N0 = noise.noise_variance
    Y = y.observations[0]
    for cand in (IndexVector(2, (0,)), IndexVector(2, (1,))):
        h = H[:, cand.support[0]]
        terms = [math.exp(-np.sum(np.abs(Y - h * s) ** 2) / N0) / (math.pi * N0) ** 3
                 for s in c.points]
        assert math.isclose(exact_mixture_loglik(H, y, cand, noise, c),
                            math.log(np.mean(terms)), rel_tol=1e-10)


def test_exact_mixture_factorizes_over_slot():
    H, x, y, noise = instance(9, 4, 5, 2, 2)
    c = qam_constellation(4)
    per = exact_mixture_loglik(H, y, x, noise, c, per_observation=True)
    assert per.shape == (2,)
    assert abs(per.sum() - exact_mixture_loglik(H, y, x, noise, c)) < 1e-10


def test_exact_mixture_high_snr_recovery():
    c = qam_constellation(4)
    for seed in range(100):
        H, x, y, noise = instance(seed, 4, 4, 1, 1, snr_db=60)
        assert exact_mixture_ml_detect(H, y, 1, noise, c).estimate == x


def test_exact_mixture_caps():
    H, _, y, noise = instance(10, 4, 20, 4, 1)
    with pytest.raises(CapacityError):
        exact_mixture_ml_detect(H, y, 4, noise, qam_constellation(16))


# CAVI ----------------------------------------------------------------------

@pytest.mark.parametrize("N,L,M", [(10, 20, 4), (6, 4, 1), (12, 9, 3)])
def test_cavi_backends_agree(N, L, M):
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    H, _, y, noise = instance(11, N, L, 2, M)
    a = cavi_detect(H, y, 2, noise, backend="python", keep_trajectory=True)
    b = cavi_detect(H, y, 2, noise, backend="cython", keep_trajectory=True)
    assert np.allclose(a.diagnostics["state"].q, b.diagnostics["state"].q, atol=1e-12)
    assert a.estimate == b.estimate


@pytest.mark.parametrize("backend", BACKENDS)
def test_cavi_single_step_is_exact_conditional(backend):
    # with every other probability binary the surrogate is the exact GA
    # covariance, so a full step (mu=1) on coordinate 1 gives the GA posterior
    H, x, y, noise = instance(12, 6, 8, 2, 3, snr_db=3)
    q0 = x.bits.astype(float)
    q0[0] = 0.3
    res = cavi_detect(H, y, 2, noise, step_size=1.0, iterations=1, initial_q=q0,
                      keep_trajectory=True, backend=backend)
    on = q0.copy()
    on[0] = 1.0
    off = q0.copy()
    off[0] = 0.0
    d = gauss_approx_metric(H, y, on, noise) - gauss_approx_metric(H, y, off, noise)
    assert math.isclose(res.diagnostics["state"].trajectory[1][0], 1 / (1 + math.exp(d)),
                        rel_tol=1e-9, abs_tol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_cavi_zero_step_keeps_q(backend):
    H, _, y, noise = instance(13, 6, 8, 2, 2)
    q0 = np.linspace(0.1, 0.9, 8)
    res = cavi_detect(H, y, 2, noise, step_size=0.0, iterations=3, initial_q=q0,
                      backend=backend)
    assert np.allclose(res.diagnostics["state"].q, q0)


def test_cavi_maintained_factor_tracks_final_q():
    H, _, y, noise = instance(14, 10, 20, 2, 4)
    state = cavi_detect(H, y, 2, noise).diagnostics["state"]
    R = covariance(H, state.q, noise)
    assert np.abs(state.factor.inverse @ R - np.eye(10)).max() < 1e-6
    assert math.isclose(state.factor.log_det, np.linalg.slogdet(R)[1], rel_tol=1e-6)
    assert np.all((state.q >= 0) & (state.q <= 1))


def test_cavi_paper_scenario_concentrates():
    hits = 0
    for seed in range(100):
        H, x, y, noise = instance(seed, 10, 10, 3, 2)
        hits += cavi_detect(H, y, 3, noise, iterations=12).estimate == x
    # about 88% over a larger sample
    assert hits >= 75


def test_cavi_single_antenna_and_arguments():
    H, _, y, noise = instance(15, 4, 1, 1, 2)
    assert cavi_detect(H, y, 1, noise).estimate.support == (0,)
    H, _, y, noise = instance(16, 4, 5, 2, 2)
    with pytest.raises(ArgumentError):
        cavi_detect(H, y, 2, noise, step_size=1.5)
    with pytest.raises(ArgumentError):
        cavi_detect(H, y, 2, noise, iterations=0)
    with pytest.raises(ArgumentError):
        cavi_detect(H, y, 2, noise, initial_q=[0.5] * 4)


def test_cavi_trajectory_length():
    H, _, y, noise = instance(17, 6, 8, 2, 2)
    traj = cavi_detect(H, y, 2, noise, iterations=4, keep_trajectory=True) \
        .diagnostics["state"].trajectory
    assert len(traj) == 5 and np.allclose(traj[0], 1 / 8)


# misc ----------------------------------------------------------------------

@settings(max_examples=50)
@given(L=st.integers(2, 12), data=st.data())
def test_pairwise_hamming_even(L, data):
    K = data.draw(st.integers(1, L))
    n = math.comb(L, K)
    a = index_set_from_rank(data.draw(st.integers(0, n - 1)), L, K)
    b = index_set_from_rank(data.draw(st.integers(0, n - 1)), L, K)
    d = pairwise_hamming(a, b)
    assert d % 2 == 0 and (d == 0) == (a == b)


def test_pairwise_hamming_mismatch():
    with pytest.raises(ArgumentError):
        pairwise_hamming(IndexVector(3, (0,)), IndexVector(4, (0,)))


def test_detectors_reject_shape_mismatch():
    H, _, y, noise = instance(18, 4, 5, 2, 2)
    with pytest.raises(ArgumentError):
        correlator_detect(H[:3], y, 2)
