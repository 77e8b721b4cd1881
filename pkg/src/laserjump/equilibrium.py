"""Isolated-cavity equilibrium: statistical weights, P(m), moments, entropies.

Everything is computed in log-space so that N in the thousands (and beyond)
does not overflow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

__all__ = [
    "Distribution",
    "EntropyReport",
    "log_weight",
    "equilibrium_distribution",
    "moments",
    "counting_error_probability",
    "entropy_report",
    "boltzmann_factor",
    "total_variation",
]

# Entries below this are dropped before normalization.
_TRIM = 1e-300


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector ``probs`` over integers starting at ``support_min``."""

    support_min: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) == 0:
            raise DomainError("probs must be a non-empty 1-d vector")
        if np.any(p < 0):
            raise DomainError("negative probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_min + len(self.probs))

    def pmf(self, m: int) -> float:
        i = m - self.support_min
        return float(self.probs[i]) if 0 <= i < len(self.probs) else 0.0

    def dense(self, size: int) -> np.ndarray:
        """Probabilities on 0..size-1 (zero outside the support)."""
        out = np.zeros(size)
        for m, p in zip(self.support, self.probs):
            if 0 <= m < size:
                out[m] = p
        return out

    @classmethod
    def from_log(cls, support_min: int, logp: np.ndarray) -> "Distribution":
        logp = np.asarray(logp, dtype=float)
        logp = logp - np.logaddexp.reduce(logp)
        keep = np.flatnonzero(logp > np.log(_TRIM))
        lo, hi = keep[0], keep[-1] + 1
        p = np.exp(logp[lo:hi])
        return cls(support_min + int(lo), p / p.sum())

    @classmethod
    def point_mass(cls, m: int) -> "Distribution":
        return cls(m, np.ones(1))


@dataclass(frozen=True)
class EntropyReport:
    """Entropies in nats. ``s_system == s_matter_avg + s_field``."""

    s_system: float
    s_matter_avg: float
    s_field: float

    @property
    def identity_residual(self) -> float:
        return abs(self.s_system - self.s_matter_avg - self.s_field)


def total_variation(p: Distribution, q: Distribution) -> float:
    size = max(p.support[-1], q.support[-1]) + 1
    lo = min(p.support_min, q.support_min)
    if lo < 0:
        raise DomainError("negative support")
    return 0.5 * float(np.abs(p.dense(size) - q.dense(size)).sum())


def _log_binom(N, n):
    n = np.asarray(n)
    return gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1)


def log_weight(n: int, N: int) -> float:
    """ln W(n) = ln C(N, n), the log of the number of atomic configurations."""
    if not 0 <= n <= N:
        raise DomainError(f"need 0 <= n <= N, got n={n}, N={N}")
    return float(_log_binom(N, n))


def _check_NU(N: int, U: int) -> None:
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if not 0 <= U <= N:
        raise DomainError(f"need 0 <= U <= N, got U={U}, N={N}")


def equilibrium_distribution(N: int, U: int) -> Distribution:
    """Equilibrium law of the quanta number m for total energy U <= N.

    P(m) is proportional to W(U - m), the weight of the atoms holding the
    remaining energy. For ``U == N`` this is the binomial C(N, m) / 2**N.
    """
    _check_NU(N, U)
    m = np.arange(0, U + 1)
    return Distribution.from_log(0, _log_binom(N, U - m))


def moments(dist: Distribution) -> tuple[float, float]:
    m = dist.support.astype(float)
    mean = float(np.dot(m, dist.probs))
    var = float(np.dot((m - mean) ** 2, dist.probs))
    return mean, var


def counting_error_probability(mean_m: float) -> tuple[float, float]:
    """Probability that a pulse holds no quanta.

    Returns ``(4**-mean_m, exp(-mean_m))``: the equilibrium-cavity value and
    the Poissonian comparison for pulses of the same mean energy.
    """
    if mean_m < 0:
        raise DomainError("mean_m must be >= 0")
    return 4.0 ** (-mean_m), float(np.exp(-mean_m))


def entropy_report(N: int, U: int) -> EntropyReport:
    _check_NU(N, U)
    n = np.arange(0, U + 1)
    lw = _log_binom(N, n)
    top = lw.max()
    w = np.exp(lw - top)
    total = w.sum()
    log_z = float(top + np.log(total))
    p = w / total
    s_matter = float(np.dot(p, lw))
    nz = p > 0
    s_field = float(-np.dot(p[nz], lw[nz] - log_z))
    return EntropyReport(log_z, s_matter, s_field)


def boltzmann_factor(N: int, U: int, min_prob: float = 1e-9) -> tuple[float, float]:
    """Geometric-law factor <n>/(N - <n>) and its fit quality.

    The fit quality is the largest relative deviation of P(m+1)/P(m) from the
    factor over m with P(m) > ``min_prob``; it is 0 when there is nothing to
    compare.
    """
    _check_NU(N, U)
    dist = equilibrium_distribution(N, U)
    mean_m, _ = moments(dist)
    mean_n = U - mean_m
    if mean_n >= N:
        raise DomainError("all atoms excited; factor undefined")
    factor = mean_n / (N - mean_n)
    lp = _log_binom(N, U - np.arange(0, U + 1))
    lp = lp - np.logaddexp.reduce(lp)
    mask = np.exp(lp[:-1]) > min_prob
    if not mask.any() or factor == 0:
        return factor, 0.0
    ratios = np.exp(lp[1:] - lp[:-1])[mask]
    return factor, float(np.max(np.abs(ratios - factor) / factor))
