"""Named, reproducible experiments that write CSV/JSON artifacts.

Every CSV starts with a ``#`` line naming the tool version and the SHA-256 of
the canonical experiment spec; no timestamps are written, so re-running the
same spec reproduces the files byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import analytics
from .equilibrium import Distribution, entropy_report, equilibrium_distribution, moments, total_variation
from .errors import ConfigError
from .fileio import fmt, write_spectrum
from .model import ModelParams, PumpDiscipline, SystemState
from .spectral import periodogram, reduce_periodograms
from .ssa import (
    SimConfig,
    burn_in_time,
    laser_start,
    occupation,
    probe_detections,
    replica_seeds,
    run_replicas,
    simulate_closed,
    simulate_laser,
    time_average_moments,
    window_counts,
)

log = logging.getLogger(__name__)

__all__ = ["EXPERIMENTS", "DEFAULTS", "ExperimentSpec", "validate_config", "run_experiment"]

EXPERIMENTS = ("equilibrium", "closed-spectrum", "laser-spectrum", "fano-scan", "entropy-table", "fig2")

_LASER = {"laser-spectrum", "fano-scan", "fig2"}

DEFAULTS = {
    "equilibrium": dict(N=100, alpha=0.0, J=0.0, runs=20, duration=200.0),
    "closed-spectrum": dict(N=100, alpha=20.0, J=0.0, runs=50, duration=10.0),
    "laser-spectrum": dict(N=100, alpha=20.0, J=1000.0, runs=100, duration=20.0),
    "fano-scan": dict(N=100, alpha=20.0, J=1000.0, runs=10, duration=50.0),
    "entropy-table": dict(N=1000, alpha=0.0, J=0.0, runs=1, duration=1.0),
    "fig2": dict(N=100, alpha=20.0, J=1000.0, runs=200, duration=20.0),
}

# fano-scan windows, in units of the cavity lifetime 1/alpha
FANO_WINDOWS = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


@dataclass
class ExperimentSpec:
    name: str
    N: int = 100
    alpha: float = 20.0
    J: float = 1000.0
    pump: str = "quiet"
    runs: int = 1
    duration: float = 20.0
    seed: int = 0
    output_dir: str = "out"
    jobs: int = 1
    # upper spectral bin, as a multiple of alpha (spectrum experiments)
    omega_max: float = 10.0

    @classmethod
    def with_defaults(cls, name: str, **overrides) -> "ExperimentSpec":
        base = dict(DEFAULTS.get(name, {}))
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(name=name, **base)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.N, self.alpha, self.J, PumpDiscipline(self.pump))

    def canonical(self) -> dict:
        """Fields that determine the results (not where or how fast they run)."""
        d = asdict(self)
        d.pop("output_dir")
        d.pop("jobs")
        return d

    @property
    def spec_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def validate_config(spec: ExperimentSpec) -> list[str]:
    """Every invariant violation of ``spec``; empty when it can run."""
    diag = []
    if spec.name not in EXPERIMENTS:
        diag.append(f"unknown experiment {spec.name!r}")
    if not isinstance(spec.N, (int, np.integer)) or spec.N < 1:
        diag.append(f"N must be a positive integer, got {spec.N!r}")
    if spec.alpha < 0:
        diag.append("alpha must be >= 0")
    if spec.J < 0:
        diag.append("J must be >= 0")
    if spec.pump not in {p.value for p in PumpDiscipline}:
        diag.append(f"pump must be quiet or poisson, got {spec.pump!r}")
    if spec.runs < 1:
        diag.append("runs must be >= 1")
    if not spec.duration > 0:
        diag.append("duration must be positive")
    if spec.seed < 0:
        diag.append("seed must be >= 0")
    if spec.jobs < 1:
        diag.append("jobs must be >= 1")
    if not spec.omega_max > 0:
        diag.append("omega_max must be positive")
    if spec.name in _LASER:
        if not (spec.alpha > 0 and spec.J > 0):
            diag.append("laser experiments need alpha > 0 and J > 0")
        elif isinstance(spec.N, (int, np.integer)) and spec.alpha > spec.N:
            diag.append(f"infeasible steady state: alpha={spec.alpha} > N={spec.N}")
    if spec.name in {"fig2", "laser-spectrum", "closed-spectrum"} and spec.runs < 2:
        diag.append("spectrum experiments need runs >= 2")
    if spec.name == "closed-spectrum" and not spec.alpha > 0:
        diag.append("closed-spectrum needs a probe alpha > 0")
    if spec.name == "equilibrium" and spec.duration <= 1.0:
        diag.append("equilibrium duration must exceed the burn-in of 1")
    if spec.name == "fano-scan" and spec.alpha > 0:
        longest = max(FANO_WINDOWS) / spec.alpha
        if spec.duration < 20 * longest:
            diag.append(f"fano-scan duration must be >= {20 * longest:g} (20 windows of the longest T)")
    return diag


class _Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, spec: ExperimentSpec):
        self.dir = Path(spec.output_dir)
        self.spec = spec
        self.paths: list[Path] = []

    @property
    def header(self) -> str:
        return f"laserjump {__version__} experiment={self.spec.name} spec_sha256={self.spec.spec_hash}"

    def csv(self, name: str, columns: list[str], rows) -> Path:
        lines = [f"# {self.header}", ",".join(columns)]
        for row in rows:
            lines.append(",".join(_cell(x) for x in row))
        return self._write(name, "\n".join(lines) + "\n")

    def json(self, name: str, obj: dict) -> Path:
        doc = {"tool": "laserjump", "version": __version__, "spec_sha256": self.spec.spec_hash}
        doc["config"] = self.spec.canonical()
        doc.update(obj)
        return self._write(name, json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def spectrum(self, name: str, spec_obj, extra: dict) -> None:
        path = self.dir / name
        extra = {"tool": "laserjump", "version": __version__, "spec_sha256": self.spec.spec_hash, **extra}
        csv_path, side = write_spectrum(spec_obj, path, preamble=[self.header], extra=extra)
        self.paths += [csv_path, side]

    def _write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.paths.append(path)
        return path

    def cleanup(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return fmt(x)
    return str(x)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run ``spec``, write its artifacts, and return the summary dict.

    Raises ``LaserJumpError`` (or ``ValueError``) on invalid configuration;
    artifacts written before a failure are removed.
    """
    diag = validate_config(spec)
    if diag:
        raise ConfigError("; ".join(diag))
    out = _Outputs(spec)
    out.dir.mkdir(parents=True, exist_ok=True)
    try:
        summary = _RUNNERS[spec.name](spec, out)
    except BaseException:
        out.cleanup()
        raise
    summary["files"] = [p.name for p in out.paths]
    return summary


# --- closed cavity -----------------------------------------------------------


def _closed_moments(result):
    trace, _ = result
    stats = time_average_moments(trace, 1.0)
    occ = occupation(trace, 1.0)
    return stats, occ


def _run_equilibrium(spec: ExperimentSpec, out: _Outputs) -> dict:
    N = spec.N
    base = SimConfig(ModelParams(N), SystemState(N, 0), spec.duration, seed=spec.seed)
    results = run_replicas(simulate_closed, base, spec.runs, spec.jobs, post=_closed_moments)
    means = np.array([r[0]["mean_m"] for r in results])
    vars_ = np.array([r[0]["var_m"] for r in results])
    exact = equilibrium_distribution(N, N)
    exact_mean, exact_var = moments(exact)
    hist = np.mean([occ.dense(N + 1) for _, occ in results], axis=0)
    sim = Distribution(0, hist / hist.sum())
    se = lambda x: float(x.std(ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("nan")  # noqa: E731
    report = {
        "sim_mean": float(means.mean()),
        "sim_mean_stderr": se(means),
        "sim_var": float(vars_.mean()),
        "sim_var_stderr": se(vars_),
        "exact_mean": exact_mean,
        "exact_var": exact_var,
        "tv_distance": total_variation(sim, exact),
        "burn_in": 1.0,
    }
    out.csv(
        "equilibrium.csv",
        ["m", "P_exact", "P_sim"],
        ((m, exact.pmf(m), hist[m]) for m in range(N + 1)),
    )
    out.json("equilibrium.json", {"report": report})
    return report


def _entropy_rows(N: int):
    for U in sorted({N, N // 2, N // 4, N // 10, 0}, reverse=True):
        yield U, entropy_report(N, U)


def _run_entropy(spec: ExperimentSpec, out: _Outputs) -> dict:
    rows = list(_entropy_rows(spec.N))
    out.csv(
        "entropy_table.csv",
        ["N", "U", "s_system", "s_matter_avg", "s_field", "identity_residual"],
        ((spec.N, U, r.s_system, r.s_matter_avg, r.s_field, r.identity_residual) for U, r in rows),
    )
    top = rows[0][1]
    report = {"N": spec.N, "U": spec.N, "s_system": top.s_system, "s_matter_avg": top.s_matter_avg, "s_field": top.s_field}
    out.json("entropy_table.json", {"report": report})
    return report


class _ProbePeriodogram:
    def __init__(self, alpha: float, k_max: int):
        self.alpha, self.k_max = alpha, k_max

    def __call__(self, result):
        trace, _ = result
        trace = trace.after(1.0) if trace.duration > 2.0 else trace
        probed = probe_detections(trace, self.alpha, trace.seed ^ 0x5EED)
        return periodogram(probed, self.k_max), probed.duration, probed.params


def _run_closed_spectrum(spec: ExperimentSpec, out: _Outputs) -> dict:
    N, alpha = spec.N, spec.alpha
    base = SimConfig(ModelParams(N), SystemState(N, 0), spec.duration + 1.0, seed=spec.seed)
    tau = spec.duration
    k_max = max(1, int(spec.omega_max * N * tau / (2 * np.pi)))
    results = run_replicas(simulate_closed, base, spec.runs, spec.jobs, post=_ProbePeriodogram(alpha, k_max))
    seeds = replica_seeds(spec.seed, spec.runs)
    est = reduce_periodograms(np.vstack([r[0] for r in results]), results[0][1], results[0][2], seeds)
    Q = alpha * N / 2.0
    theory = analytics.spectrum_detection_closed(N, alpha, est.omegas)
    out.spectrum("closed_spectrum_sim.csv", est, {"burn_in": 1.0, "probe_alpha": alpha})
    out.csv(
        "closed_spectrum_theory.csv",
        ["omega", "S", "S_over_Q"],
        zip(est.omegas, theory, theory / Q),
    )
    rel = np.abs(est.values - theory) / theory
    report = {"Q": Q, "median_rel_dev": float(np.median(rel)), "bins": int(len(rel))}
    out.json("closed_spectrum.json", {"report": report})
    return report


# --- laser --------------------------------------------------------------------


class _LaserPeriodogram:
    def __init__(self, burn: float, k_max: int):
        self.burn, self.k_max = burn, k_max

    def __call__(self, result):
        trace, _ = result
        tr = trace.after(self.burn)
        return periodogram(tr, self.k_max), tr.blocked_pumps


def laser_spectrum(spec: ExperimentSpec):
    """Run-averaged detection spectrum for the laser settings of ``spec``.

    Each run starts at the rounded operating point, is simulated for
    burn-in + duration, and the burn-in is cut before estimation.
    """
    p = spec.params
    burn = burn_in_time(p)
    base = SimConfig(p, laser_start(p), spec.duration + burn, seed=spec.seed)
    k_max = max(1, int(spec.omega_max * spec.alpha * spec.duration / (2 * np.pi)))
    results = run_replicas(simulate_laser, base, spec.runs, spec.jobs, post=_LaserPeriodogram(burn, k_max))
    seeds = replica_seeds(spec.seed, spec.runs)
    est = reduce_periodograms(np.vstack([r[0] for r in results]), spec.duration, p, seeds)
    blocked = int(sum(r[1] for r in results))
    return est, blocked, burn


def _laser_outputs(spec: ExperimentSpec, out: _Outputs, prefix: str, with_closed: bool) -> dict:
    est, blocked, burn = laser_spectrum(spec)
    N, alpha = spec.N, spec.alpha
    mean_m = spec.J / alpha
    Q = alpha * mean_m
    out.spectrum(f"{prefix}_simulated.csv", est, {"burn_in": burn, "blocked_pumps": blocked})
    if spec.pump == "quiet":
        exact = analytics.spectrum_detection_laser(N, alpha, mean_m, est.omegas)
        out.csv(f"{prefix}_exact.csv", ["omega", "S", "S_over_Q"], zip(est.omegas, exact, exact / Q))
    if with_closed:
        approx = analytics.spectrum_detection_closed(N, alpha, est.omegas)
        Qc = alpha * N / 2.0
        out.csv(f"{prefix}_closed_approx.csv", ["omega", "S", "S_over_Q"], zip(est.omegas, approx, approx / Qc))
    peak_w, peak_h = analytics.relaxation_peak(N, alpha, mean_m)
    report = {
        "Q": Q,
        "mean_m": mean_m,
        "n_runs": est.n_runs,
        "tau_m": est.tau_m,
        "bins": int(len(est.omegas)),
        "blocked_pumps": blocked,
        "theory_peak_omega": peak_w,
        "theory_peak_S_over_Q": peak_h,
        "sim_peak_omega": float(est.omegas[np.argmax(np.where(est.flagged, -np.inf, est.values))]),
    }
    out.json(f"{prefix}_manifest.json" if prefix == "fig2" else f"{prefix}.json", {"report": report})
    return report


def _run_laser_spectrum(spec, out):
    return _laser_outputs(spec, out, "laser_spectrum", with_closed=False)


def _run_fig2(spec, out):
    return _laser_outputs(spec, out, "fig2", with_closed=True)


class _FanoCounts:
    def __init__(self, burn: float, windows):
        self.burn, self.windows = burn, windows

    def __call__(self, result):
        trace, _ = result
        tr = trace.after(self.burn)
        return [window_counts(tr, T) for T in self.windows]


def _pooled_fano(per_run_counts, i):
    c = np.concatenate([r[i] for r in per_run_counts]).astype(float)
    return float(c.var(ddof=1) / c.mean())


def _run_fano_scan(spec: ExperimentSpec, out: _Outputs) -> dict:
    windows = [c / spec.alpha for c in FANO_WINDOWS]
    burn = 10.0 / spec.alpha
    mean_m = spec.J / spec.alpha
    table = {}
    for pump in ("quiet", "poisson"):
        s = replace(spec, pump=pump)
        p = s.params
        base = SimConfig(p, laser_start(p), spec.duration + burn, seed=spec.seed)
        res = run_replicas(simulate_laser, base, spec.runs, spec.jobs, post=_FanoCounts(burn, windows))
        table[pump] = [_pooled_fano(res, i) for i in range(len(windows))]
    theory = [analytics.counting_fano_laser(spec.N, spec.alpha, mean_m, T) for T in windows]
    rows = list(zip(windows, table["quiet"], table["poisson"], theory))
    out.csv("fano_scan.csv", ["T", "fano_quiet", "fano_poisson", "fano_quiet_theory"], rows)
    report = {"windows": windows, "fano_quiet": table["quiet"], "fano_poisson": table["poisson"], "fano_quiet_theory": theory}
    out.json("fano_scan.json", {"report": report})
    return report


_RUNNERS = {
    "equilibrium": _run_equilibrium,
    "entropy-table": _run_entropy,
    "closed-spectrum": _run_closed_spectrum,
    "laser-spectrum": _run_laser_spectrum,
    "fig2": _run_fig2,
    "fano-scan": _run_fano_scan,
}
