"""Active-antenna (index) detectors for repetition-coded spatial modulation.

Four detectors share one result type:

* :func:`correlator_detect` -- matched-filter energies, top K.
* :func:`ml_ga_detect` -- exhaustive minimisation of the Gaussian-approximation
  metric ``sum_m y_m^H R(x)^{-1} y_m + M ln det R(x)`` with
  ``R(x) = H diag(x) H^H + N0 I``.
* :func:`cavi_detect` -- mean-field coordinate ascent over Bernoulli activity
  probabilities, O(L (N^2 + M N)) per sweep and independent of K.
* :func:`exact_mixture_ml_detect` -- exact likelihood (sum over every symbol
  hypothesis); only usable on tiny instances, kept as a reference.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .errors import ArgumentError, CapacityError, NumericalDomainError
from .model import Constellation, IndexVector, NoiseModel, ReceivedSlot, index_set_from_rank
from .numerics import HermitianFactor, invert_and_logdet

__all__ = [
    "DetectionResult",
    "VariationalState",
    "DEFAULT_ENUMERATION_CAP",
    "correlator_energies",
    "correlator_detect",
    "gauss_approx_metric",
    "ml_ga_detect",
    "exact_mixture_ml_detect",
    "exact_mixture_loglik",
    "cavi_detect",
    "top_k",
    "pairwise_hamming",
]

DEFAULT_ENUMERATION_CAP = 10**6
EXACT_SYMBOL_CAP = 4096
EXACT_SUBSET_CAP = 10**4


@dataclass
class VariationalState:
    """CAVI iterate after the last sweep."""

    q: np.ndarray
    factor: HermitianFactor
    iteration: int
    step_size: float
    trajectory: Optional[list] = None


@dataclass
class DetectionResult:
    estimate: IndexVector
    metric: float
    diagnostics: dict = field(default_factory=dict)


def _prepare(H, slot):
    H = np.ascontiguousarray(H, dtype=np.complex128)
    Y = slot.observations if isinstance(slot, ReceivedSlot) else np.asarray(slot)
    Y = np.ascontiguousarray(Y, dtype=np.complex128)
    if H.ndim != 2 or Y.ndim != 2 or Y.shape[1] != H.shape[0]:
        raise ArgumentError(f"channel {H.shape} and observations {Y.shape} do not match")
    return H, Y


def top_k(scores, K: int) -> IndexVector:
    """Indices of the K largest scores; ties go to the smaller index."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    return IndexVector(len(scores), tuple(sorted(int(i) for i in order[:K])))


def correlator_energies(H, slot) -> np.ndarray:
    """``rho_l = sum_m |h_l^H y_m|^2``."""
    H, Y = _prepare(H, slot)
    return np.sum(np.abs(Y.conj() @ H) ** 2, axis=0)


def correlator_detect(H, slot, K: int) -> DetectionResult:
    energies = correlator_energies(H, slot)
    if not (1 <= K <= len(energies)):
        raise ArgumentError(f"need 1 <= K <= L, got K={K}")
    est = top_k(energies, K)
    return DetectionResult(est, float(energies[list(est.support)].sum()),
                           {"energies": energies})


def _weights(x, L):
    if isinstance(x, IndexVector):
        if x.L != L:
            raise ArgumentError(f"index vector has L={x.L}, channel has {L} columns")
        return x.bits.astype(float)
    w = np.asarray(x, dtype=float).ravel()
    if w.shape[0] != L:
        raise ArgumentError(f"weight vector has length {w.shape[0]}, expected {L}")
    return w


def covariance(H, x, noise: NoiseModel) -> np.ndarray:
    """``H diag(x) H^H + N0 I`` for binary or fractional activity ``x``."""
    H = np.asarray(H, dtype=complex)
    w = _weights(x, H.shape[1])
    R = (H * w) @ H.conj().T + noise.noise_variance * np.eye(H.shape[0])
    return 0.5 * (R + R.conj().T)


def gauss_approx_metric(H, slot, x, noise: NoiseModel) -> float:
    """Negative GA log-likelihood up to constants: ``sum_m y_m^H R^{-1} y_m + M ln det R``.

    ``x`` may be an :class:`IndexVector` or any length-L weight vector
    (the all-zero vector gives the noise-only metric).
    """
    H, Y = _prepare(H, slot)
    f = invert_and_logdet(covariance(H, x, noise))
    quad = np.einsum("mi,ij,mj->", Y.conj(), f.inverse, Y).real
    return float(quad + Y.shape[0] * f.log_det)


def ml_ga_detect(H, slot, K: int, noise: NoiseModel, *,
                 cap: int = DEFAULT_ENUMERATION_CAP, method: str = "covariance",
                 keep_table: bool = False) -> DetectionResult:
    """Exhaustive Gaussian-approximation ML over all ``C(L, K)`` supports.

    Parameters
    ----------
    method : {"covariance", "gram"}
        ``"covariance"`` walks the subset tree with N x N rank-1 inverse
        updates (one ``A^{-1} h`` per candidate).  ``"gram"`` runs the same
        enumeration on ``H^H A^{-1} H`` and is much faster for ``L < N``;
        both return the same decision up to round-off.
    keep_table : bool
        Store every candidate metric (lexicographic order) in
        ``diagnostics["metrics"]``.

    Raises
    ------
    CapacityError
        If ``C(L, K)`` exceeds ``cap``; use :func:`cavi_detect` instead.
    """
    H, Y = _prepare(H, slot)
    L = H.shape[1]
    if not (1 <= K <= L):
        raise ArgumentError(f"need 1 <= K <= L, got K={K}, L={L}")
    total = math.comb(L, K)
    if total > cap:
        raise CapacityError(
            f"C({L}, {K}) = {total} candidates exceeds the cap of {cap}; use cavi_detect")
    if method == "covariance":
        search = kernels.mlga_search
    elif method == "gram":
        search = kernels.mlga_search_gram
    else:
        raise ArgumentError(f"unknown ML-GA method {method!r}")
    table = np.empty(total) if keep_table else None
    rank, support, metric = search(H, Y, noise.noise_variance, K, table)
    if rank < 0 or not math.isfinite(metric):
        raise NumericalDomainError("ML-GA search produced no finite metric")
    diagnostics = {"rank": int(rank)}
    if keep_table:
        diagnostics["metrics"] = table
    return DetectionResult(IndexVector(L, support), float(metric), diagnostics)


def exact_mixture_loglik(H, slot, x: IndexVector, noise: NoiseModel,
                         constellation: Constellation, per_observation: bool = False):
    """Exact log-likelihood ``ln f(y | x)`` with uniform symbols on ``supp(x)``."""
    H, Y = _prepare(H, slot)
    N0 = noise.noise_variance
    n = H.shape[0]
    combos = np.array(list(itertools.product(constellation.points, repeat=x.K)))
    means = H[:, list(x.support)] @ combos.T
    dist = np.sum(np.abs(Y[:, :, None] - means[None, :, :]) ** 2, axis=1)
    ll = (logsumexp(-dist / N0, axis=1) - math.log(len(combos))
          - n * math.log(math.pi * N0))
    return ll if per_observation else float(ll.sum())


def exact_mixture_ml_detect(H, slot, K: int, noise: NoiseModel,
                            constellation: Constellation) -> DetectionResult:
    """Exact Gaussian-mixture ML support detection; reference for tiny instances."""
    H, Y = _prepare(H, slot)
    L = H.shape[1]
    if constellation.order ** K > EXACT_SYMBOL_CAP:
        raise CapacityError(
            f"|S|^K = {constellation.order ** K} symbol hypotheses exceeds {EXACT_SYMBOL_CAP}")
    total = math.comb(L, K)
    if total > EXACT_SUBSET_CAP:
        raise CapacityError(f"C({L}, {K}) = {total} supports exceeds {EXACT_SUBSET_CAP}")
    ll = np.array([exact_mixture_loglik(H, Y, index_set_from_rank(r, L, K), noise,
                                        constellation) for r in range(total)])
    best = int(np.argmax(ll))
    return DetectionResult(index_set_from_rank(best, L, K), float(ll[best]),
                           {"rank": best, "loglik": ll})


def cavi_detect(H, slot, K: int, noise: NoiseModel, step_size: float = 0.5,
                iterations: int = 10, initial_q=None, keep_trajectory: bool = False,
                backend: Optional[str] = None) -> DetectionResult:
    """Variational (CAVI) index detection.

    Each sweep visits ``l = 1..L`` in order.  For coordinate ``l`` the
    covariance surrogate with ``x_l`` forced to 0 or 1 and every other
    coordinate at its current probability is one rank-1 step away from the
    maintained inverse, which gives the two log-evidences; their logistic
    is blended into ``q_l`` with ``step_size`` and the maintained inverse
    moves to the new ``q_l``.  The inverse is rebuilt from scratch at the
    start of every sweep to stop round-off drift.

    The decision is the K largest final probabilities.
    """
    H, Y = _prepare(H, slot)
    L = H.shape[1]
    if not (1 <= K <= L):
        raise ArgumentError(f"need 1 <= K <= L, got K={K}, L={L}")
    if not (0.0 <= step_size <= 1.0):
        raise ArgumentError(f"step_size must lie in [0, 1], got {step_size}")
    if iterations < 1:
        raise ArgumentError(f"iterations must be >= 1, got {iterations}")
    if initial_q is None:
        q = np.full(L, 1.0 / L)
    else:
        q = np.array(initial_q, dtype=float).ravel()
        if q.shape[0] != L or np.any(q < 0) or np.any(q > 1):
            raise ArgumentError("initial_q must hold L probabilities in [0, 1]")
    sweep = kernels.get_backend(backend).cavi_sweep
    trajectory = [q.copy()] if keep_trajectory else None
    for it in range(1, iterations + 1):
        f = invert_and_logdet(covariance(H, q, noise))
        inv = np.ascontiguousarray(f.inverse)
        quads = np.ascontiguousarray(np.einsum("mi,ij,mj->m", Y.conj(), inv, Y).real)
        log_det, failed = sweep(inv, quads, f.log_det, H, Y, q, float(step_size))
        if failed >= 0:
            raise NumericalDomainError(
                f"singular rank-1 update at antenna {failed + 1}, iteration {it}")
        if not np.all(np.isfinite(q)):
            raise NumericalDomainError(f"non-finite variational probability at iteration {it}")
        if keep_trajectory:
            trajectory.append(q.copy())
    state = VariationalState(q, HermitianFactor(inv, log_det), iterations, step_size, trajectory)
    est = top_k(q, K)
    return DetectionResult(est, float(q[list(est.support)].sum()), {"state": state})


def pairwise_hamming(x: IndexVector, x2: IndexVector) -> int:
    if x.L != x2.L:
        raise ArgumentError(f"length mismatch: {x.L} vs {x2.L}")
    return int(np.count_nonzero(x.bits != x2.bits))
