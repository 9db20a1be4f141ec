"""Complex Hermitian linear-algebra kernels and seeded random streams.

The detectors only ever need three things from a covariance matrix
``A = H diag(w) H^H + N0 I``: its inverse, its log-determinant and
quadratic forms ``y^H A^{-1} y``.  :class:`HermitianFactor` carries the
first two; the rank-1 helpers move them along ``A + c h h^H`` in O(N^2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ArgumentError, NumericalDomainError, SingularUpdateError

__all__ = [
    "EQ_TOL",
    "SINGULAR_TOL",
    "HermitianFactor",
    "RngStream",
    "sample_cscg",
    "invert_and_logdet",
    "rank1_inverse_update",
    "rank1_logdet_update",
    "quadratic_form",
    "hermitize",
]

EQ_TOL = 1e-9
SINGULAR_TOL = 1e-12


class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by numpy's Philox generator, whose 128-bit key is exactly the
    pair ``(seed, stream_id)``.  Two streams with the same key replay the
    same draws; streams with different ids are independent by construction
    of the cipher, so trials can be handed out to workers in any order.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def integers(self, high, size=None):
        return self.generator.integers(0, high, size=size)

    def standard_cscg(self, shape) -> np.ndarray:
        """Unit-variance CSCG draws (real and imaginary parts each N(0, 1/2))."""
        re = self.generator.standard_normal(shape)
        im = self.generator.standard_normal(shape)
        return (re + 1j * im) * np.sqrt(0.5)


def sample_cscg(rng: RngStream, rows: int, cols: int, variance: float) -> np.ndarray:
    """Draw a ``rows x cols`` matrix with i.i.d. CN(0, variance) entries."""
    if not variance > 0:
        raise ArgumentError(f"variance must be positive, got {variance}")
    if rows < 1 or cols < 1:
        raise ArgumentError(f"dimensions must be positive, got {rows}x{cols}")
    return rng.standard_cscg((rows, cols)) * np.sqrt(variance)


@dataclass
class HermitianFactor:
    """Inverse and log-determinant of a Hermitian positive-definite matrix."""

    inverse: np.ndarray
    log_det: float

    @property
    def dim(self) -> int:
        return self.inverse.shape[0]

    def copy(self) -> "HermitianFactor":
        return HermitianFactor(self.inverse.copy(), self.log_det)


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def invert_and_logdet(a: np.ndarray) -> HermitianFactor:
    """Invert a Hermitian PD matrix through its Cholesky factor.

    Raises
    ------
    ArgumentError
        If ``a`` is not square or not Hermitian to 1e-10 relative.
    NumericalDomainError
        If the Cholesky factorization fails (``a`` not positive definite).
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ArgumentError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.conj().T).max() > 1e-10 * scale:
        raise ArgumentError("matrix is not Hermitian")
    if not np.all(np.isfinite(a)):
        raise NumericalDomainError("matrix has non-finite entries")
    try:
        c, lower = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError(f"matrix is not positive definite: {exc}") from None
    log_det = 2.0 * float(np.sum(np.log(np.diag(c).real)))
    inv = scipy.linalg.cho_solve((c, lower), np.eye(a.shape[0], dtype=complex))
    return HermitianFactor(hermitize(inv), log_det)


def _rank1_denominator(f: HermitianFactor, h: np.ndarray, c: float):
    u = f.inverse @ h
    a = float(np.real(np.vdot(h, u)))
    return u, 1.0 + c * a


def rank1_inverse_update(f: HermitianFactor, h: np.ndarray, c: float) -> HermitianFactor:
    """Factor of ``A + c h h^H`` from the factor of ``A``.

    Sherman-Morrison for the inverse and the matrix determinant lemma for
    the log-determinant; both reuse ``u = A^{-1} h``.
    """
    h = np.asarray(h, dtype=complex).ravel()
    if h.shape[0] != f.dim:
        raise ArgumentError(f"vector length {h.shape[0]} does not match dim {f.dim}")
    if c == 0:
        return f.copy()
    u, den = _rank1_denominator(f, h, c)
    if not den > SINGULAR_TOL:
        raise SingularUpdateError(f"rank-1 update denominator {den:.3e} <= {SINGULAR_TOL}")
    inv = f.inverse - (c / den) * np.outer(u, u.conj())
    return HermitianFactor(hermitize(inv), f.log_det + float(np.log(den)))


def rank1_logdet_update(f: HermitianFactor, h: np.ndarray, c: float) -> float:
    """``ln det(A + c h h^H)`` from the factor of ``A``."""
    h = np.asarray(h, dtype=complex).ravel()
    if h.shape[0] != f.dim:
        raise ArgumentError(f"vector length {h.shape[0]} does not match dim {f.dim}")
    if c == 0:
        return f.log_det
    _, den = _rank1_denominator(f, h, c)
    if not den > SINGULAR_TOL:
        raise SingularUpdateError(f"log argument {den:.3e} <= {SINGULAR_TOL}")
    return f.log_det + float(np.log(den))


def quadratic_form(y: np.ndarray, f: HermitianFactor) -> float:
    """Real part of ``y^H A^{-1} y``."""
    y = np.asarray(y, dtype=complex).ravel()
    if y.shape[0] != f.dim:
        raise ArgumentError(f"vector length {y.shape[0]} does not match dim {f.dim}")
    return float(np.real(np.vdot(y, f.inverse @ y)))
