"""Birth-death master equation of the isolated cavity (U = N)."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
import sympy

from .equilibrium import Distribution
from .errors import DomainError, StepTooLarge

__all__ = [
    "Generator",
    "EinsteinReport",
    "build_generator",
    "step_distribution",
    "evolve",
    "stationary_distribution",
    "balance_residual",
    "verify_einstein_rates",
]

STABILITY_LIMIT = 0.1


@dataclass(frozen=True, eq=False)
class Generator:
    """Up rates E(m) = (N-m)(m+1) and down rates A(m) = m**2 for m in 0..N."""

    N: int
    up_rates: np.ndarray
    down_rates: np.ndarray

    @property
    def max_rate(self) -> float:
        return float(np.max(self.up_rates + self.down_rates))

    def matrix(self) -> np.ndarray:
        """Dense rate matrix L with dP/dt = L @ P (columns sum to zero)."""
        E, A = self.up_rates, self.down_rates
        L = np.diag(-(E + A))
        L += np.diag(E[:-1], -1)
        L += np.diag(A[1:], 1)
        return L

    def drift(self, p: np.ndarray) -> np.ndarray:
        E, A = self.up_rates, self.down_rates
        out = -(E + A) * p
        out[1:] += E[:-1] * p[:-1]
        out[:-1] += A[1:] * p[1:]
        return out


def build_generator(N: int) -> Generator:
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    m = np.arange(N + 1, dtype=float)
    return Generator(N, (N - m) * (m + 1), m**2)


def _as_vector(P: Distribution, N: int) -> np.ndarray:
    if P.support_min < 0 or P.support[-1] > N:
        raise DomainError(f"distribution support must lie in [0, {N}]")
    return P.dense(N + 1)


def _to_distribution(p: np.ndarray) -> Distribution:
    p = np.clip(p, 0.0, None)
    return Distribution(0, p / p.sum())


def _rk4(gen: Generator, p: np.ndarray, dt: float) -> np.ndarray:
    k1 = gen.drift(p)
    k2 = gen.drift(p + 0.5 * dt * k1)
    k3 = gen.drift(p + 0.5 * dt * k2)
    k4 = gen.drift(p + dt * k3)
    return p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_distribution(P: Distribution, gen: Generator, dt: float) -> Distribution:
    """Advance P(m, t) by ``dt`` with one classical Runge-Kutta step."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    if dt * gen.max_rate > STABILITY_LIMIT:
        raise StepTooLarge(
            f"dt*max_rate = {dt * gen.max_rate:.3g} exceeds {STABILITY_LIMIT}"
        )
    return _to_distribution(_rk4(gen, _as_vector(P, gen.N), dt))


def evolve(P: Distribution, gen: Generator, t: float, dt: float | None = None) -> Distribution:
    """Integrate to time ``t`` with equal RK4 steps no larger than ``dt``.

    The default step is the largest one allowed by the stability guard.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    p = _as_vector(P, gen.N)
    if t == 0:
        return _to_distribution(p)
    dt_max = STABILITY_LIMIT / gen.max_rate if dt is None else dt
    steps = int(np.ceil(t / dt_max - 1e-12))
    h = t / steps
    if h * gen.max_rate > STABILITY_LIMIT:
        raise StepTooLarge(f"dt*max_rate = {h * gen.max_rate:.3g} exceeds {STABILITY_LIMIT}")
    for _ in range(steps):
        p = _rk4(gen, p, h)
        s = p.sum()
        if abs(s - 1.0) > 1e-12:
            p = p / s
    return _to_distribution(p)


def stationary_distribution(gen: Generator) -> Distribution:
    """Solve P(m+1) A(m+1) = P(m) E(m) by forward recursion (in log-space)."""
    E, A = gen.up_rates, gen.down_rates
    logp = np.zeros(gen.N + 1)
    logp[1:] = np.cumsum(np.log(E[:-1]) - np.log(A[1:]))
    return Distribution.from_log(0, logp)


def balance_residual(P: Distribution, gen: Generator) -> float:
    """max_m |P(m+1) A(m+1) - P(m) E(m)|."""
    p = _as_vector(P, gen.N)
    return float(np.max(np.abs(p[1:] * gen.down_rates[1:] - p[:-1] * gen.up_rates[:-1])))


@dataclass
class EinsteinReport:
    N: int
    confirmed: bool
    # basis of the admissible (a, b, c) coefficient space, exact rationals
    solution_basis: list[tuple[Fraction, Fraction, Fraction]]
    residuals: dict[tuple, Fraction] = field(default_factory=dict)


def _binomial_law(N: int) -> list[Fraction]:
    return [Fraction(comb(N, m), 2**N) for m in range(N + 1)]


def _einstein_residual(N: int, a, b, c, law: list[Fraction]) -> Fraction:
    """max_m |P(m+1) A(m+1) - P(m) E(m)| for E = (N-m)(am+b), A = c m**2."""
    worst = Fraction(0)
    for m in range(N):
        up = law[m] * (N - m) * (a * m + b)
        down = law[m + 1] * c * (m + 1) ** 2
        worst = max(worst, abs(down - up))
    return worst


DEFAULT_PROBES = ((1, 1, 1), (1, 0, 1), (2, 2, 2), (1, 1, 2), (2, 1, 1), (1, 2, 1), (0, 1, 1))


def verify_einstein_rates(N: int, probes=DEFAULT_PROBES) -> EinsteinReport:
    """Check that detailed balance with the binomial law forces a = b = c.

    With linear rates E(n, m) = n(am + b) and A(n, m) = (N - n) c m on the
    diagonal n = N - m, balance against C(N, m)/2**N must hold for every
    m < N. Each m gives one linear equation in (a, b, c); the exact null space
    of that system is returned. It is one-dimensional and spanned by
    (1, 1, 1) exactly when the Einstein coefficients are the only solution.
    """
    if N < 2:
        raise DomainError("N must be >= 2")
    law = _binomial_law(N)
    rows = []
    for m in range(N):
        # coefficients of a, b, c in  P(m)E(m) - P(m+1)A(m+1) = 0
        pe = law[m] * (N - m)
        pa = law[m + 1] * (m + 1) ** 2
        rows.append([sympy.Rational(pe * m), sympy.Rational(pe), -sympy.Rational(pa)])
    null = sympy.Matrix(rows).nullspace()
    basis = [tuple(Fraction(int(x.p), int(x.q)) for x in v) for v in null]
    confirmed = len(basis) == 1 and len(set(basis[0])) == 1 and basis[0][0] != 0
    residuals = {
        tuple(p): _einstein_residual(N, *(Fraction(x) for x in p), law) for p in probes
    }
    return EinsteinReport(N, confirmed, basis, residuals)
