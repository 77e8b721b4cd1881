"""Trace and spectrum files.

Trace CSV: ``#`` header lines holding a JSON object (seed, params, duration,
initial state), then columns ``t,kind`` with kind one of E, A, Q, P.

Spectrum CSV: columns ``omega,S,stderr,flagged`` plus a JSON sidecar
(``<name>.json``) with n_runs, tau_m, params and the seed list.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .model import KIND_CODES, EventKind, EventTrace, ModelParams, SystemState
from .spectral import Spectrum

__all__ = [
    "trace_to_csv",
    "trace_from_csv",
    "write_trace",
    "read_trace",
    "spectrum_to_csv",
    "write_spectrum",
    "read_spectrum",
    "fmt",
]


def fmt(x: float) -> str:
    """Shortest round-trip repr; keeps CSV output byte-stable."""
    return repr(float(x))


def _trace_header(trace: EventTrace) -> dict:
    return {
        "seed": trace.seed,
        "duration": trace.duration,
        "params": trace.params.to_dict(),
        "initial": {"n_upper": trace.initial.n_upper, "m_quanta": trace.initial.m_quanta},
        "blocked_pumps": trace.blocked_pumps,
    }


def trace_to_csv(trace: EventTrace, preamble: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    buf.write("# " + json.dumps(_trace_header(trace), sort_keys=True) + "\n")
    buf.write("t,kind\n")
    codes = np.array(KIND_CODES)[trace.kinds.astype(int)]
    for t, c in zip(trace.times, codes):
        buf.write(f"{fmt(t)},{c}\n")
    return buf.getvalue()


def trace_from_csv(text: str) -> EventTrace:
    header = None
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("{"):
                header = json.loads(body)
            continue
        rows.append(line)
    if header is None:
        raise ValueError("trace file lacks a JSON header line")
    reader = csv.DictReader(rows)
    times, kinds = [], []
    for r in reader:
        times.append(float(r["t"]))
        kinds.append(EventKind.from_code(r["kind"]))
    return EventTrace(
        times=np.array(times, dtype=float),
        kinds=np.array(kinds, dtype=np.int8),
        duration=float(header["duration"]),
        params=ModelParams.from_dict(header["params"]),
        seed=int(header["seed"]),
        initial=SystemState(header["initial"]["n_upper"], header["initial"]["m_quanta"]),
        blocked_pumps=int(header.get("blocked_pumps", 0)),
    )


def write_trace(trace: EventTrace, path) -> Path:
    path = Path(path)
    path.write_text(trace_to_csv(trace))
    return path


def read_trace(path) -> EventTrace:
    return trace_from_csv(Path(path).read_text())


def spectrum_to_csv(spec: Spectrum, preamble: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    buf.write("omega,S,stderr,flagged\n")
    for w, s, e, f in zip(spec.omegas, spec.values, spec.stderr, spec.flagged):
        buf.write(f"{fmt(w)},{fmt(s)},{fmt(e)},{int(bool(f))}\n")
    return buf.getvalue()


def spectrum_sidecar(spec: Spectrum, extra: dict | None = None) -> dict:
    meta = {
        "n_runs": spec.n_runs,
        "tau_m": spec.tau_m,
        "params": spec.params,
        "seeds": list(spec.seeds),
    }
    if extra:
        meta.update(extra)
    return meta


def write_spectrum(spec: Spectrum, path, preamble: list[str] = (), extra: dict | None = None) -> tuple[Path, Path]:
    path = Path(path)
    path.write_text(spectrum_to_csv(spec, preamble))
    side = path.with_suffix(".json")
    side.write_text(json.dumps(spectrum_sidecar(spec, extra), indent=2, sort_keys=True) + "\n")
    return path, side


def read_spectrum(path) -> Spectrum:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    meta = json.loads(path.with_suffix(".json").read_text())
    return Spectrum(
        omegas=np.array([float(r["omega"]) for r in rows]),
        values=np.array([float(r["S"]) for r in rows]),
        stderr=np.array([float(r["stderr"]) for r in rows]),
        n_runs=int(meta["n_runs"]),
        tau_m=float(meta["tau_m"]),
        flagged=np.array([r["flagged"] == "1" for r in rows]),
        seeds=[int(s) for s in meta["seeds"]],
        params=meta["params"],
    )
