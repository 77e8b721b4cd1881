"""Exact event-driven simulation of the cavity jump process.

Random numbers come from numpy's PCG64 in fixed-size blocks of uniforms; the
compiled kernel only consumes them, so a (config, seed) pair always yields the
same trace. Exponential waiting times use the inverse CDF -log(1 - u)/R.

Replica streams: :func:`replica_seeds` derives one integer seed per run from
``SeedSequence(seed)``; each run then owns ``PCG64(run_seed)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .equilibrium import Distribution
from .errors import BoundsViolation, ConfigError, TooFewWindows, ZeroRateHalt
from .model import EventKind, EventTrace, ModelParams, PumpDiscipline, SystemState

__all__ = [
    "SimConfig",
    "Trajectory",
    "simulate_closed",
    "simulate_laser",
    "trajectory",
    "time_average_moments",
    "occupation",
    "counting_fano",
    "window_counts",
    "replica_seeds",
    "run_replicas",
    "laser_start",
    "burn_in_time",
    "probe_detections",
]

_BLOCK = 1 << 16
_CHUNK = 1 << 18

_PUMP_NONE, _PUMP_QUIET, _PUMP_POISSON = 0, 1, 2
_DONE, _NEED_U, _NEED_OUT, _HALT = 0, 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    initial: SystemState
    duration: float
    seed: int = 0
    record_states: bool = False
    sample_dt: float = 0.01
    # refuse runs expected to record more events than this
    max_events: int = 200_000_000

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if self.record_states and not self.sample_dt > 0:
            raise ConfigError("sample_dt must be positive when recording states")
        try:
            self.initial.check(self.params.n_atoms)
        except BoundsViolation as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    n_vals: np.ndarray
    m_vals: np.ndarray


@njit(cache=True)
def _kernel(n, m, t, t_end, N, alpha, J, pump_mode, k_pump, u, ui, out_t, out_k, n_out):
    """Advance the jump process until done or a buffer runs out.

    Returns (n, m, t, ui, n_out, k_pump, blocked, status).
    """
    blocked = 0
    next_pump = (k_pump + 1) / J if pump_mode == 1 else np.inf
    n_u = u.shape[0]
    n_cap = out_t.shape[0]
    while True:
        if ui + 2 > n_u:
            return n, m, t, ui, n_out, k_pump, blocked, 1
        if n_out >= n_cap:
            return n, m, t, ui, n_out, k_pump, blocked, 2
        e = n * (m + 1.0)
        a = (N - n) * float(m)
        q = alpha * m
        p = J if pump_mode == 2 else 0.0
        r = e + a + q + p
        if r > 0.0:
            t_new = t - math.log(1.0 - u[ui]) / r
        else:
            t_new = np.inf
        ui += 1
        if next_pump <= t_new and next_pump <= t_end:
            # deterministic pump arrival comes first; the pending draw is
            # discarded, which is exact for exponential clocks
            t = next_pump
            k_pump += 1
            next_pump = (k_pump + 1) / J
            if n < N:
                n += 1
                out_t[n_out] = t
                out_k[n_out] = 3
                n_out += 1
            else:
                blocked += 1
            continue
        if t_new > t_end:
            if r == 0.0 and pump_mode != 1:
                return n, m, t, ui, n_out, k_pump, blocked, 3
            return n, m, t_end, ui, n_out, k_pump, blocked, 0
        t = t_new
        x = u[ui] * r
        ui += 1
        if x < e:
            n -= 1
            m += 1
            kind = 0
        elif x < e + a:
            n += 1
            m -= 1
            kind = 1
        elif x < e + a + q:
            m -= 1
            kind = 2
        else:
            if n >= N:
                blocked += 1
                continue
            n += 1
            kind = 3
        out_t[n_out] = t
        out_k[n_out] = kind
        n_out += 1


def _simulate(params: ModelParams, initial: SystemState, duration: float, seed: int, pump_mode: int):
    rng = np.random.Generator(np.random.PCG64(seed))
    n, m, t = initial.n_upper, initial.m_quanta, 0.0
    N, alpha, J = params.n_atoms, params.loss_rate, params.pump_rate
    k_pump = 0
    blocked = 0
    chunks_t, chunks_k = [], []
    out_t = np.empty(_CHUNK)
    out_k = np.empty(_CHUNK, dtype=np.int8)
    n_out = 0
    u = rng.random(_BLOCK)
    ui = 0
    while True:
        n, m, t, ui, n_out, k_pump, nb, status = _kernel(
            n, m, t, duration, N, alpha, J, pump_mode, k_pump, u, ui, out_t, out_k, n_out
        )
        blocked += nb
        if status == _NEED_U:
            u = rng.random(_BLOCK)
            ui = 0
        elif status == _NEED_OUT:
            chunks_t.append(out_t)
            chunks_k.append(out_k)
            out_t = np.empty(_CHUNK)
            out_k = np.empty(_CHUNK, dtype=np.int8)
            n_out = 0
        elif status == _HALT:
            raise ZeroRateHalt(f"absorbing state (n={n}, m={m}) at t={t}")
        else:
            break
    chunks_t.append(out_t[:n_out])
    chunks_k.append(out_k[:n_out])
    trace = EventTrace(
        times=np.concatenate(chunks_t),
        kinds=np.concatenate(chunks_k),
        duration=float(duration),
        params=params,
        seed=int(seed),
        initial=SystemState(initial.n_upper, initial.m_quanta, 0.0),
        blocked_pumps=int(blocked),
    )
    return trace


def _expected_events(params: ModelParams, initial: SystemState, duration: float) -> float:
    N = params.n_atoms
    if params.is_closed:
        U = initial.energy
        # crude upper bound on E + A over the closed diagonal
        rate = max(N * (U + 1), 1) * 2.0
        return rate * duration
    mean_m = params.pump_rate / params.loss_rate
    mean_n = min(N, (N + params.loss_rate) / 2.0)
    rate = mean_n * (mean_m + 1) + (N - mean_n) * mean_m + 2 * params.pump_rate
    return rate * duration


def simulate_closed(config: SimConfig) -> tuple[EventTrace, Trajectory | None]:
    """Gillespie simulation of the isolated cavity; n + m is conserved."""
    if not config.params.is_closed:
        raise ConfigError("simulate_closed needs loss_rate = pump_rate = 0")
    trace = _simulate(config.params, config.initial, config.duration, config.seed, _PUMP_NONE)
    traj = trajectory(trace, config.sample_dt) if config.record_states else None
    return trace, traj


def simulate_laser(config: SimConfig) -> tuple[EventTrace, Trajectory | None]:
    """Pumped cavity with a detector.

    Emission, absorption and detection are stochastic channels. A quiet pump
    injects atoms at t_k = k/J; a Poisson pump is a fourth channel of rate J.
    Pump arrivals finding n = N are dropped and counted in
    ``trace.blocked_pumps``.
    """
    p = config.params
    if not (p.loss_rate > 0 and p.pump_rate > 0):
        raise ConfigError("simulate_laser needs loss_rate > 0 and pump_rate > 0; use simulate_closed")
    if _expected_events(p, config.initial, config.duration) > config.max_events:
        raise ConfigError(
            f"run would record ~{_expected_events(p, config.initial, config.duration):.3g} events, "
            f"above max_events={config.max_events}"
        )
    mode = _PUMP_QUIET if p.pump_discipline is PumpDiscipline.QUIET else _PUMP_POISSON
    trace = _simulate(p, config.initial, config.duration, config.seed, mode)
    traj = trajectory(trace, config.sample_dt) if config.record_states else None
    return trace, traj


def laser_start(params: ModelParams) -> SystemState:
    """Initial state at the rounded steady-state operating point."""
    N = params.n_atoms
    mean_m = params.pump_rate / params.loss_rate
    mean_n = (N + params.loss_rate) / 2.0
    return SystemState(int(min(N, round(mean_n))), int(round(mean_m)))


def burn_in_time(params: ModelParams) -> float:
    """Transient discarded before stationary statistics: 10 cavity lifetimes."""
    return 10.0 / params.loss_rate


def trajectory(trace: EventTrace, sample_dt: float) -> Trajectory:
    """Sample the right-continuous state on the grid 0, dt, 2dt, ... <= duration."""
    grid = np.arange(0.0, trace.duration + 1e-12 * trace.duration, sample_dt)
    n_after, m_after = trace.states()
    idx = np.searchsorted(trace.times, grid, side="right")
    n_all = np.concatenate([[trace.initial.n_upper], n_after])
    m_all = np.concatenate([[trace.initial.m_quanta], m_after])
    return Trajectory(grid, n_all[idx], m_all[idx])


def _holding(trace: EventTrace, t_start: float):
    """(n, m, holding time) of every piece of the path on [t_start, duration]."""
    n_after, m_after = trace.states()
    n_all = np.concatenate([[trace.initial.n_upper], n_after])
    m_all = np.concatenate([[trace.initial.m_quanta], m_after])
    edges = np.concatenate([[0.0], trace.times, [trace.duration]])
    lo = np.clip(edges[:-1], t_start, None)
    hi = np.clip(edges[1:], t_start, None)
    return n_all, m_all, hi - lo


def time_average_moments(trace: EventTrace, t_start: float = 0.0) -> dict:
    """Time-weighted means and variances of n and m over [t_start, duration]."""
    n, m, w = _holding(trace, t_start)
    total = w.sum()
    if total <= 0:
        raise ValueError("empty averaging window")
    mean_m = float(np.dot(w, m) / total)
    mean_n = float(np.dot(w, n) / total)
    return {
        "mean_m": mean_m,
        "var_m": float(np.dot(w, (m - mean_m) ** 2) / total),
        "mean_n": mean_n,
        "var_n": float(np.dot(w, (n - mean_n) ** 2) / total),
    }


def occupation(trace: EventTrace, t_start: float = 0.0) -> Distribution:
    """Fraction of time spent at each m over [t_start, duration]."""
    _, m, w = _holding(trace, t_start)
    hist = np.bincount(m, weights=w, minlength=1)
    lo = int(np.flatnonzero(hist)[0])
    hist = hist[lo:]
    return Distribution(lo, hist / hist.sum())


def window_counts(trace: EventTrace, window_T: float, kind: EventKind = EventKind.DETECTION) -> np.ndarray:
    n_win = int(np.floor(trace.duration / window_T + 1e-9))
    edges = np.arange(n_win + 1) * window_T
    counts, _ = np.histogram(trace.times_of(kind), bins=edges)
    return counts


def counting_fano(trace: EventTrace | Sequence[EventTrace], window_T: float) -> float:
    """Variance/mean of detection counts in consecutive windows of length T.

    A sequence of traces pools the windows of every run.
    """
    traces = [trace] if isinstance(trace, EventTrace) else list(trace)
    counts = []
    for tr in traces:
        if tr.duration / window_T < 20 - 1e-9:
            raise TooFewWindows(
                f"window {window_T} gives fewer than 20 windows in duration {tr.duration}"
            )
        counts.append(window_counts(tr, window_T))
    c = np.concatenate(counts).astype(float)
    mean = c.mean()
    if mean == 0:
        raise TooFewWindows("no detection events")
    return float(c.var(ddof=1) / mean)


def replica_seeds(seed: int, runs: int) -> list[int]:
    """Independent per-run seeds derived from one experiment seed."""
    state = np.random.SeedSequence(seed).generate_state(runs, dtype=np.uint64)
    return [int(s) for s in state]


def run_replicas(
    fn: Callable[[SimConfig], tuple],
    base: SimConfig,
    runs: int,
    jobs: int = 1,
    post: Callable | None = None,
) -> list:
    """Run ``fn`` once per replica seed; results are ordered by seed index.

    ``post`` (a picklable top-level function) maps each ``(trace, traj)``
    result in the worker, which keeps large traces out of the parent.
    """
    configs = [replace(base, seed=s) for s in replica_seeds(base.seed, runs)]
    task = fn if post is None else _Composed(fn, post)
    if jobs <= 1:
        return [task(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(task, configs))


class _Composed:
    def __init__(self, fn, post):
        self.fn, self.post = fn, post

    def __call__(self, cfg):
        return self.post(self.fn(cfg))


def probe_detections(trace: EventTrace, alpha: float, seed: int) -> EventTrace:
    """Add detections of a weak probe absorber to a closed-cavity trace.

    While m is constant the probe clicks as a Poisson process of rate
    alpha*m, without removing quanta, so the cavity statistics are left
    untouched. The returned trace carries ``loss_rate = alpha`` to record the
    probe strength.
    """
    if not alpha > 0:
        raise ConfigError("probe alpha must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    _, m, w = _holding(trace, 0.0)
    starts = np.concatenate([[0.0], trace.times])
    counts = rng.poisson(alpha * m * w)
    clicks = np.repeat(starts, counts) + rng.random(counts.sum()) * np.repeat(w, counts)
    times = np.concatenate([trace.times, clicks])
    kinds = np.concatenate([trace.kinds, np.full(len(clicks), EventKind.DETECTION, dtype=np.int8)])
    order = np.argsort(times, kind="stable")
    params = replace(trace.params, loss_rate=float(alpha))
    return replace(trace, times=times[order], kinds=kinds[order], params=params)
