"""Closed-form noise results from the linearized rate equations.

Spectral densities are two-sided in the baseband angular frequency Omega:
a variance is the integral of the density over dOmega/2pi on the whole
real line.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateError, DomainError, InfeasibleError

__all__ = [
    "SteadyState",
    "steady_state",
    "spectrum_dm_closed",
    "spectrum_detection_closed",
    "variance_m_laser",
    "spectrum_detection_laser",
    "spectrum_detection_laser_large_power",
    "delta_m_transfer",
    "rebuilt_spectra",
    "relaxation_peak",
    "counting_fano_laser",
    "integrate_spectrum",
    "log_grid",
]


@dataclass(frozen=True)
class SteadyState:
    mean_m: float
    mean_n: float
    J: float
    alpha: float
    N: int

    @property
    def detection_rate(self) -> float:
        return self.alpha * self.mean_m

    @property
    def emission_rate(self) -> float:
        """E = <n><m> at the operating point."""
        return self.mean_n * self.mean_m

    @property
    def absorption_rate(self) -> float:
        return (self.N - self.mean_n) * self.mean_m


def steady_state(N: int, alpha: float, J: float) -> SteadyState:
    """Operating point <m> = J/alpha, <n> = (N + alpha)/2."""
    if not alpha > 0 or not J > 0:
        raise DomainError("alpha and J must be positive")
    if alpha > N:
        raise InfeasibleError(f"alpha={alpha} exceeds N={N}: gain cannot balance loss")
    return SteadyState(J / alpha, (N + alpha) / 2.0, float(J), float(alpha), N)


def spectrum_dm_closed(N: int, Omega):
    """Lorentzian (N**2/2) / (N**2 + Omega**2) of the closed-cavity m(t)."""
    Omega = np.asarray(Omega, dtype=float)
    return (N * N / 2.0) / (N * N + Omega**2)


def spectrum_detection_closed(N: int, alpha: float, Omega):
    """Detection-rate density for a weak probe absorber in the closed cavity.

    alpha**2 S_dm(Omega) + Q with Q = alpha N / 2: super-Poissonian at all
    frequencies.
    """
    return alpha**2 * spectrum_dm_closed(N, Omega) + alpha * N / 2.0


def variance_m_laser(N: int, alpha: float, mean_m: float) -> float:
    return mean_m * ((N + alpha) / (4.0 * mean_m) + 0.5)


def spectrum_detection_laser(N: int, alpha: float, mean_m: float, Omega):
    """Quiet-pump detection-rate density S_dQ(Omega) in absolute units."""
    W2 = np.asarray(Omega, dtype=float) ** 2
    num = (N + alpha) / (4.0 * alpha * mean_m**2) * W2 - 1.0
    den = W2 / alpha**2 + (1.0 - W2 / (2.0 * alpha * mean_m)) ** 2
    return alpha * mean_m * (1.0 + num / den)


def spectrum_detection_laser_large_power(alpha: float, Omega):
    """S/Q = 1 - 1/((Omega/alpha)**2 + 1)."""
    x = (np.asarray(Omega, dtype=float) / alpha) ** 2
    return 1.0 - 1.0 / (x + 1.0)


def delta_m_transfer(N: int, alpha: float, mean_m: float, Omega):
    """Transfer coefficients of dm onto the (e - a) and q noise sources.

    Returns ``(c_ea, c_q)`` with dm = c_ea (e - a) + c_q q.
    """
    W = np.asarray(Omega, dtype=float)
    den = 2j * W * mean_m + 2.0 * alpha * mean_m - W**2
    if np.any(den == 0):
        raise DegenerateError("transfer function singular (Omega = 0 with alpha = 0)")
    return 1j * W / den, -(2.0 * mean_m + 1j * W) / den


def rebuilt_spectra(N: int, alpha: float, mean_m: float, Omega, mean_n: float | None = None):
    """S_dm and S_dQ assembled from the transfer coefficients and white sources.

    Sources are uncorrelated with densities E + A for (e - a) and Q for q.
    """
    if mean_n is None:
        mean_n = (N + alpha) / 2.0
    c_ea, c_q = delta_m_transfer(N, alpha, mean_m, Omega)
    s_ea = mean_n * mean_m + (N - mean_n) * mean_m
    Q = alpha * mean_m
    s_dm = np.abs(c_ea) ** 2 * s_ea + np.abs(c_q) ** 2 * Q
    s_dq = alpha**2 * np.abs(c_ea) ** 2 * s_ea + np.abs(alpha * c_q + 1.0) ** 2 * Q
    return s_dm, s_dq


def integrate_spectrum(func, scale: float = 1.0) -> float:
    """Integral of an even density over dOmega/2pi on the whole real line.

    ``scale`` is a characteristic frequency used to split the half-line so
    the adaptive quadrature sees the structure.
    """
    pts = [0.0, scale, 10 * scale, 100 * scale]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += quad(func, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
    total += quad(func, pts[-1], np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]
    return 2.0 * total / (2.0 * np.pi)


def relaxation_peak(N: int, alpha: float, mean_m: float) -> tuple[float, float]:
    """Location and height (S/Q) of the maximum of the quiet-pump density.

    Found by maximizing over x = Omega**2: the stationarity condition of
    (b x - 1) / (x/alpha**2 + (1 - x/c)**2) is a quadratic in x.
    Returns (nan, nan) when there is no interior maximum.
    """
    b = (N + alpha) / (4.0 * alpha * mean_m**2)
    c = 2.0 * alpha * mean_m
    g = 1.0 / alpha**2
    # d/dx: b*D(x) - (b x - 1)*D'(x) = 0, D = g x + (1 - x/c)**2
    # -> (-b/c**2) x**2 + (2/c**2) x + (b + g - 2/c) = 0
    roots = np.roots([-b / c**2, 2.0 / c**2, b + g - 2.0 / c])
    roots = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
    if not roots:
        return float("nan"), float("nan")
    Omega = float(np.sqrt(max(roots)))
    return Omega, float(spectrum_detection_laser(N, alpha, mean_m, Omega) / (alpha * mean_m))


def counting_fano_laser(N: int, alpha: float, mean_m: float, T: float) -> float:
    """Fano factor of detection counts in windows of length T (quiet pump).

    var(count) is the integral of S_dQ(Omega) * 4 sin**2(Omega T/2)/Omega**2
    over dOmega/2pi.
    """
    Q = alpha * mean_m

    def f(W):
        if W == 0:
            return 0.0
        return spectrum_detection_laser(N, alpha, mean_m, W) * (2 * np.sin(W * T / 2) / W) ** 2

    # the window kernel oscillates with period 2pi/T; integrate lobe by lobe
    period = 2 * np.pi / T
    edges = np.arange(0, 400 * period + 1e-9, period / 2)
    total = sum(quad(f, lo, hi, limit=100)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    # tail: the kernel averages to 2/W**2 and S -> Q
    total += 2.0 * Q / edges[-1]
    return 2.0 * total / (2.0 * np.pi) / (Q * T)


def log_grid(alpha: float, mean_m: float, points: int = 1000) -> np.ndarray:
    """Log-spaced Omega from alpha/100 to 100*max(alpha, sqrt(2 alpha <m>))."""
    hi = 100.0 * max(alpha, np.sqrt(2.0 * alpha * mean_m))
    return np.geomspace(alpha / 100.0, hi, points)
