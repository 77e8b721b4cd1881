"""Spectral density of the detection point process, estimated run by run.

For one run of length tau with detection times t_i the estimate at
Omega_k = 2 pi k / tau (k = 1, 2, ...) is |sum_i exp(j Omega_k t_i)|**2 / tau;
runs are then averaged. No tapering or windowing is applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import EmptyTrace, MismatchedRuns
from .model import EventKind, EventTrace, PumpDiscipline

__all__ = [
    "Spectrum",
    "omega_grid",
    "periodogram",
    "average_spectrum",
    "reduce_periodograms",
    "comb_flags",
]

# bins between exact re-anchoring of the phasor recurrence
_ANCHOR = 64


@dataclass(frozen=True, eq=False)
class Spectrum:
    omegas: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_runs: int
    tau_m: float
    flagged: np.ndarray = None
    seeds: list[int] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.flagged is None:
            object.__setattr__(self, "flagged", np.zeros(len(self.omegas), dtype=bool))

    @property
    def k(self) -> np.ndarray:
        return np.rint(self.omegas * self.tau_m / (2 * np.pi)).astype(int)


def omega_grid(tau_m: float, k_max: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(1, k_max + 1) / tau_m


@njit(cache=True)
def _phasor_sums(times, omega1, k_max):
    """sum_i exp(j k omega1 t_i) for k = 1..k_max.

    Successive bins are reached by rotating with exp(j omega1 t_i); the
    phasor is recomputed exactly every ``_ANCHOR`` bins so rounding cannot
    accumulate.
    """
    re = np.zeros(k_max)
    im = np.zeros(k_max)
    for t in times:
        c1 = math.cos(omega1 * t)
        s1 = math.sin(omega1 * t)
        c, s = c1, s1
        for k in range(k_max):
            if k % _ANCHOR == 0 and k > 0:
                c = math.cos((k + 1) * omega1 * t)
                s = math.sin((k + 1) * omega1 * t)
            re[k] += c
            im[k] += s
            c, s = c * c1 - s * s1, c * s1 + s * c1
    return re, im


def _phasor_power(times: np.ndarray, tau_m: float, k_max: int) -> np.ndarray:
    re, im = _phasor_sums(np.ascontiguousarray(times, dtype=float), 2.0 * np.pi / tau_m, k_max)
    return (re * re + im * im) / tau_m


def periodogram(trace: EventTrace, k_max: int) -> np.ndarray:
    """Single-run estimate at Omega_k, k = 1..k_max, from detection events only."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    times = trace.times_of(EventKind.DETECTION)
    if len(times) == 0:
        raise EmptyTrace("trace holds no detection events")
    return _phasor_power(times, trace.duration, k_max)


def comb_flags(omegas: np.ndarray, tau_m: float, pump_rate: float, width_bins: int = 3) -> np.ndarray:
    """Mark bins within ``width_bins`` grid steps of a positive multiple of 2 pi J."""
    if pump_rate <= 0:
        return np.zeros(len(omegas), dtype=bool)
    line = 2.0 * np.pi * pump_rate
    nearest = np.maximum(np.rint(omegas / line), 1.0) * line
    return np.abs(omegas - nearest) * tau_m / (2.0 * np.pi) <= width_bins + 1e-9


def average_spectrum(traces: Sequence[EventTrace], k_max: int, periodograms: Sequence[np.ndarray] | None = None) -> Spectrum:
    """Run-averaged estimate with the standard error of the mean per bin.

    ``periodograms`` may carry precomputed per-run estimates (same order as
    ``traces``), e.g. when they were computed in worker processes.
    """
    traces = list(traces)
    if len(traces) < 2:
        raise MismatchedRuns("need at least two runs to average")
    tau = traces[0].duration
    params = traces[0].params
    for tr in traces[1:]:
        if tr.duration != tau:
            raise MismatchedRuns(f"durations differ: {tr.duration} vs {tau}")
        if tr.params != params:
            raise MismatchedRuns("runs were produced with different parameters")
    if periodograms is None:
        periodograms = [periodogram(tr, k_max) for tr in traces]
    return reduce_periodograms(np.vstack(periodograms), tau, params, [tr.seed for tr in traces])


def reduce_periodograms(stack: np.ndarray, tau: float, params, seeds: list[int]) -> Spectrum:
    n_runs, k_max = stack.shape
    omegas = omega_grid(tau, k_max)
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(n_runs)
    if params.pump_discipline is PumpDiscipline.QUIET:
        flagged = comb_flags(omegas, tau, params.pump_rate)
    else:
        flagged = np.zeros(k_max, dtype=bool)
    return Spectrum(omegas, mean, stderr, n_runs, tau, flagged, list(seeds), params.to_dict())
