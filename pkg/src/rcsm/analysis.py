"""Pairwise-error analysis of Gaussian-approximation index detection.

For two supports that differ in one antenna (true column ``h1``, wrong
column ``h2``) and interference-plus-noise covariance ``D``, the Chernoff
bound on the conditional PEP is

    P(x -> x') <= exp(-lam d) * (kappa(lam) * exp(-gamma_pep(lam)))^M

with ``alpha_l = h_l^H D^{-1} h_l``, ``beta = h1^H D^{-1} h2`` and
``theta_l(lam) = lam / (1 + alpha_l - alpha_l lam)``.  ``M`` sits in the
exponent: that is the coding gain of repeating the support over the slot.

In the large-system limit (N -> inf, load eta = Q/N fixed) the alphas
concentrate on the MMSE SINR and ``|beta|^2`` on ``omega/N``, which gives a
channel-independent PEP and the index-error estimate
``(L - Q) * P2(lam*)``.  For finite N this estimate is optimistic at high
SNR (Jensen), so treat it as a trend, not ground truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalDomainError
from .numerics import invert_and_logdet

__all__ = [
    "PepParams",
    "AsymptoticParams",
    "ErrorEstimate",
    "theta",
    "pep_components",
    "conditional_pep_bound",
    "log_conditional_pep_bound",
    "logdet_distance",
    "pep_params_from_channel",
    "optimal_conditional_bound",
    "asymptotic_mmse_sinr",
    "asymptotic_pep_snr",
    "asymptotic_kappa",
    "optimize_lambda",
    "approx_index_error",
    "golden_section_max",
]

_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PepParams:
    alpha1: float
    alpha2: float
    beta_sq: float
    M: int
    lam: float
    d: float = 0.0


def theta(alpha: float, lam: float) -> float:
    den = 1.0 + alpha - alpha * lam
    if not den > 0:
        raise NumericalDomainError(
            f"lambda={lam} is past the pole (1 + alpha)/alpha = {(1 + alpha) / alpha}")
    return lam / den


def pep_components(alpha1: float, alpha2: float, beta_sq: float, lam: float):
    """Return ``(kappa(lam), gamma_pep(lam))``.

    Raises
    ------
    NumericalDomainError
        If ``lam <= 0`` or ``lam`` crosses the pole of ``theta_2``.
    """
    if not lam > 0:
        raise NumericalDomainError(f"lambda must be positive, got {lam}")
    t2 = theta(alpha2, lam)
    c1 = alpha1 + t2 * beta_sq
    den = alpha1 + 1.0 + lam * c1
    kappa = (alpha1 + 1.0) * (alpha2 + 1.0) * t2 / (lam * den)
    gamma_pep = alpha1 - (alpha1 + 1.0) * c1 / den
    return kappa, gamma_pep


def log_conditional_pep_bound(p: PepParams) -> float:
    kappa, g = pep_components(p.alpha1, p.alpha2, p.beta_sq, p.lam)
    return -p.lam * p.d + p.M * (math.log(kappa) - g)


def conditional_pep_bound(p: PepParams) -> float:
    """Chernoff bound ``exp(-lam d) (kappa exp(-gamma_pep))^M``."""
    return math.exp(log_conditional_pep_bound(p))


def logdet_distance(alpha1: float, alpha2: float, M: int) -> float:
    """``d = M ln((1 + alpha2) / (1 + alpha1))``, the log-det gap of the two hypotheses."""
    if alpha1 < 0 or alpha2 < 0:
        raise ArgumentError("alphas must be non-negative")
    return M * (math.log1p(alpha2) - math.log1p(alpha1))


def pep_params_from_channel(h1, h2, D, M: int, lam: float = 0.0) -> PepParams:
    """Bound parameters for a concrete (h1, h2, D) realisation."""
    inv = invert_and_logdet(np.asarray(D, dtype=complex)).inverse
    h1 = np.asarray(h1, dtype=complex).ravel()
    h2 = np.asarray(h2, dtype=complex).ravel()
    a1 = float(np.vdot(h1, inv @ h1).real)
    a2 = float(np.vdot(h2, inv @ h2).real)
    beta = complex(np.vdot(h1, inv @ h2))
    return PepParams(a1, a2, abs(beta) ** 2, M, lam, logdet_distance(a1, a2, M))


def golden_section_max(fun, lo: float, hi: float, tol: float = 1e-8):
    """Maximise a unimodal ``fun`` on ``[lo, hi]``; returns ``(x, fun(x))``."""
    a, b = lo, hi
    c = b - _PHI * (b - a)
    d = a + _PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _PHI * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def optimal_conditional_bound(p: PepParams) -> PepParams:
    """``p`` with ``lam`` chosen to minimise the conditional bound on (0, lambda_bar_2)."""
    lam_bar = (1.0 + p.alpha2) / p.alpha2 if p.alpha2 > 0 else 1e6
    eps = 1e-6 * lam_bar

    def objective(lam):
        return -log_conditional_pep_bound(PepParams(p.alpha1, p.alpha2, p.beta_sq, p.M,
                                                    lam, p.d))

    lam, _ = golden_section_max(objective, eps, lam_bar - eps)
    return PepParams(p.alpha1, p.alpha2, p.beta_sq, p.M, lam, p.d)


def asymptotic_mmse_sinr(gamma: float, eta: float) -> float:
    """Large-system MMSE SINR for equal-power i.i.d. signatures.

    Positive root of ``a = gamma / (1 + eta gamma / (1 + a))``, i.e. of
    ``a^2 + (1 + eta gamma - gamma) a - gamma = 0``.
    """
    if not gamma > 0:
        raise ArgumentError(f"SNR must be positive, got {gamma}")
    if eta < 0:
        raise ArgumentError(f"load must be non-negative, got {eta}")
    b = gamma * (1.0 - eta) - 1.0
    disc = math.sqrt(b * b + 4.0 * gamma)
    # avoid cancellation when b is large and positive or negative
    if b >= 0:
        return 0.5 * (b + disc)
    return 2.0 * gamma / (disc - b)


@dataclass(frozen=True)
class AsymptoticParams:
    """Large-system operating point: linear SNR, load ``eta = Q/N`` and ``N``."""

    gamma: float
    eta: float
    n_rx: int

    def __post_init__(self):
        if not self.gamma > 0 or self.eta < 0 or self.n_rx < 1:
            raise ArgumentError(f"invalid asymptotic parameters {self}")

    @classmethod
    def from_system(cls, snr: float, Q: int, N: int) -> "AsymptoticParams":
        return cls(snr, Q / N, N)

    @property
    def alpha_bar(self) -> float:
        return asymptotic_mmse_sinr(self.gamma, self.eta)

    @property
    def omega_bar(self) -> float:
        g = self.gamma
        return asymptotic_mmse_sinr(g * (2.0 + g), self.eta) / (2.0 / g + 1.0)

    @property
    def beta_sq(self) -> float:
        return self.omega_bar / self.n_rx

    @property
    def lambda_bar(self) -> float:
        a = self.alpha_bar
        return (a + 1.0) / a

    def theta_bar(self, lam: float) -> float:
        return theta(self.alpha_bar, lam)


def asymptotic_pep_snr(a: AsymptoticParams, lam: float) -> float:
    alpha = a.alpha_bar
    c1 = alpha + a.omega_bar * a.theta_bar(lam) / a.n_rx
    return alpha - (alpha + 1.0) * c1 / (alpha + 1.0 + lam * c1)


def asymptotic_kappa(a: AsymptoticParams, lam: float) -> float:
    alpha = a.alpha_bar
    return pep_components(alpha, alpha, a.beta_sq, lam)[0]


def optimize_lambda(a: AsymptoticParams, M: int):
    """Return ``(lam*, P2(lam*))`` maximising ``gamma_pep - ln kappa`` on (0, lambda_bar)."""
    lam_bar = a.lambda_bar
    eps = 1e-6 * lam_bar

    def objective(lam):
        val = asymptotic_pep_snr(a, lam) - math.log(asymptotic_kappa(a, lam))
        if not math.isfinite(val):
            raise NumericalDomainError(f"non-finite objective at lambda={lam}")
        return val

    lam_star, best = golden_section_max(objective, eps, lam_bar - eps, tol=1e-9)
    return lam_star, math.exp(-M * best)


@dataclass(frozen=True)
class ErrorEstimate:
    pep: float
    p_ie: float
    lambda_star: float
    multiplicity: int
    exponent_per_slot: float
    regime: str = "asymptotic"


def approx_index_error(L: int, Q: int, a: AsymptoticParams, M: int) -> ErrorEstimate:
    """``(L - Q) * (kappa(lam*) exp(-gamma_pep(lam*)))^M``.

    ``exponent_per_slot`` is ``gamma_pep(lam*) - ln kappa(lam*)``; the
    estimate decays as ``exp(-M * exponent_per_slot)``.
    """
    if not (0 <= Q < L):
        raise ArgumentError(f"need 0 <= Q < L, got Q={Q}, L={L}")
    lam_star, p2 = optimize_lambda(a, M)
    exponent = asymptotic_pep_snr(a, lam_star) - math.log(asymptotic_kappa(a, lam_star))
    return ErrorEstimate(p2, (L - Q) * p2, lam_star, L - Q, exponent)
