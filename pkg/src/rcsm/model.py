"""Repetition-coded spatial modulation: constellations, IM bits, slot transmission.

A slot is ``M`` symbol vectors sharing one active-antenna set.  Antennas
are 0-based everywhere inside the package; :meth:`IndexVector.labels`
gives the 1-based labels used in reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .numerics import RngStream

__all__ = [
    "SystemDims",
    "NoiseModel",
    "Constellation",
    "IndexVector",
    "SlotSignal",
    "ReceivedSlot",
    "qam_constellation",
    "im_bit_count",
    "bits_per_symbol",
    "index_set_from_rank",
    "rank_from_index_set",
    "transmit_slot",
    "simulate_received_slot",
    "draw_channel",
]


@dataclass(frozen=True)
class SystemDims:
    L: int
    N: int
    K: int
    M: int

    def __post_init__(self):
        if not (1 <= self.K <= self.L):
            raise ArgumentError(f"need 1 <= K <= L, got K={self.K}, L={self.L}")
        if self.N < 1 or self.M < 1:
            raise ArgumentError(f"need N >= 1 and M >= 1, got N={self.N}, M={self.M}")


@dataclass(frozen=True)
class NoiseModel:
    """Linear SNR ``gamma``; unit symbol energy so ``N0 = 1/gamma``."""

    snr: float

    def __post_init__(self):
        if not (self.snr > 0 and math.isfinite(self.snr)):
            raise ArgumentError(f"snr must be positive and finite, got {self.snr}")

    @classmethod
    def from_db(cls, snr_db: float) -> "NoiseModel":
        return cls(10.0 ** (snr_db / 10.0))

    @property
    def noise_variance(self) -> float:
        return 1.0 / self.snr

    @property
    def symbol_variance(self) -> float:
        return 1.0

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)


@dataclass(frozen=True)
class Constellation:
    points: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def bits(self) -> int:
        return int(math.log2(self.order))


def _gray_to_binary(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def qam_constellation(order: int) -> Constellation:
    """Unit-energy square QAM in Gray-mappable order.

    Point ``i`` carries the bit label ``i``: the high half of the label picks
    the in-phase level, the low half the quadrature level, each through a
    Gray code, so neighbouring levels differ in one bit.
    """
    if order not in (4, 16, 64):
        raise ArgumentError(f"unsupported QAM order {order}; expected 4, 16 or 64")
    side = math.isqrt(order)
    half = side.bit_length() - 1
    levels = 2 * np.arange(side) - (side - 1)
    pts = np.empty(order, dtype=complex)
    for i in range(order):
        gi, gq = i >> half, i & (side - 1)
        pts[i] = levels[_gray_to_binary(gi)] + 1j * levels[_gray_to_binary(gq)]
    pts /= math.sqrt(2 * (order - 1) / 3)
    return Constellation(pts)


def im_bit_count(L: int, K: int) -> int:
    """Index-modulation bits ``floor(log2 C(L, K))``, in exact integer arithmetic."""
    if not (1 <= K <= L):
        raise ArgumentError(f"need 1 <= K <= L, got K={K}, L={L}")
    return math.comb(L, K).bit_length() - 1


def bits_per_symbol(L: int, K: int, M: int, order: int) -> float:
    if M < 1:
        raise ArgumentError(f"slot length must be >= 1, got {M}")
    if order < 2 or order & (order - 1):
        raise ArgumentError(f"constellation order must be a power of 2, got {order}")
    return K * math.log2(order) + im_bit_count(L, K) / M


@dataclass(frozen=True)
class IndexVector:
    """Binary activity pattern with exactly ``K`` of ``L`` antennas on."""

    L: int
    support: tuple

    def __post_init__(self):
        sup = tuple(int(s) for s in self.support)
        if not sup:
            raise ArgumentError("empty support is not allowed")
        if list(sup) != sorted(set(sup)):
            raise ArgumentError(f"support must be strictly increasing, got {sup}")
        if sup[0] < 0 or sup[-1] >= self.L:
            raise ArgumentError(f"support {sup} out of range for L={self.L}")
        object.__setattr__(self, "support", sup)

    @classmethod
    def from_bits(cls, bits) -> "IndexVector":
        bits = np.asarray(bits)
        return cls(len(bits), tuple(np.flatnonzero(bits)))

    @classmethod
    def from_labels(cls, L: int, labels) -> "IndexVector":
        """Build from 1-based antenna labels."""
        return cls(L, tuple(sorted(int(s) - 1 for s in labels)))

    @property
    def K(self) -> int:
        return len(self.support)

    @property
    def bits(self) -> np.ndarray:
        x = np.zeros(self.L, dtype=np.int8)
        x[list(self.support)] = 1
        return x

    def labels(self) -> tuple:
        return tuple(s + 1 for s in self.support)


def index_set_from_rank(rank: int, L: int, K: int) -> IndexVector:
    """The ``rank``-th K-subset of ``range(L)`` in lexicographic order."""
    total = math.comb(L, K) if 1 <= K <= L else 0
    if not (0 <= rank < total):
        raise ArgumentError(f"rank {rank} out of range [0, {total})")
    support = []
    start = 0
    for j in range(K):
        for c in range(start, L):
            # subsets whose j-th element is c
            n = math.comb(L - 1 - c, K - 1 - j)
            if rank < n:
                support.append(c)
                start = c + 1
                break
            rank -= n
    return IndexVector(L, tuple(support))


def rank_from_index_set(x: IndexVector) -> int:
    L, K = x.L, x.K
    rank = 0
    prev = -1
    for j, s in enumerate(x.support):
        for c in range(prev + 1, s):
            rank += math.comb(L - 1 - c, K - 1 - j)
        prev = s
    return rank


@dataclass(frozen=True)
class SlotSignal:
    """``M x L`` symbol matrix; row ``m`` is the transmitted vector ``s_m``."""

    index: IndexVector
    symbols: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.symbols.shape[0]


@dataclass(frozen=True)
class ReceivedSlot:
    """``M x N`` observation matrix; row ``m`` is ``y_m``."""

    observations: np.ndarray = field(repr=False)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=complex)
        if obs.ndim != 2:
            raise ArgumentError(f"observations must be M x N, got shape {obs.shape}")
        if not np.all(np.isfinite(obs)):
            raise ArgumentError("observations contain non-finite entries")
        object.__setattr__(self, "observations", obs)

    @property
    def M(self) -> int:
        return self.observations.shape[0]

    @property
    def N(self) -> int:
        return self.observations.shape[1]


def transmit_slot(x: IndexVector, constellation: Constellation, M: int,
                  rng: RngStream) -> SlotSignal:
    """I.i.d. uniform constellation symbols on ``supp(x)`` for all ``M`` vectors."""
    if M < 1:
        raise ArgumentError(f"slot length must be >= 1, got {M}")
    idx = rng.integers(constellation.order, size=(M, x.K))
    symbols = np.zeros((M, x.L), dtype=complex)
    symbols[:, list(x.support)] = constellation.points[idx]
    return SlotSignal(x, symbols)


def draw_channel(rng: RngStream, N: int, L: int) -> np.ndarray:
    """Rayleigh channel with i.i.d. CN(0, 1/N) entries, so ``E||h_l||^2 = 1``."""
    return rng.standard_cscg((N, L)) * np.sqrt(1.0 / N)


def simulate_received_slot(H: np.ndarray, slot: SlotSignal, noise: NoiseModel,
                           rng: RngStream) -> ReceivedSlot:
    """``y_m = H s_m + n_m`` with ``n_m ~ CN(0, N0 I)``.

    The noise is drawn at unit variance and then scaled, so the same stream
    gives paired noise realisations across SNR values.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[1] != slot.symbols.shape[1]:
        raise ArgumentError(
            f"channel shape {H.shape} incompatible with {slot.symbols.shape[1]} antennas")
    N = H.shape[0]
    n = rng.standard_cscg((slot.M, N)) * math.sqrt(noise.noise_variance)
    return ReceivedSlot(slot.symbols @ H.T + n)
