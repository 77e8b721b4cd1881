"""Stochastic simulation and closed-form noise theory of a two-level-atom laser.

Submodules: ``model`` (state and jump rates), ``equilibrium`` (isolated-cavity
statistics and entropy), ``master_eq`` (birth-death master equation),
``ssa`` (exact event-driven simulation), ``analytics`` (linearized spectra),
``spectral`` (run-averaged detection spectra), ``experiments``/``cli``.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .model import (  # noqa: E402
    EventKind,
    EventTrace,
    ModelParams,
    PumpDiscipline,
    SystemState,
    apply_event,
    rate_absorption,
    rate_detection,
    rate_emission,
)

__all__ = [
    "EventKind",
    "EventTrace",
    "ModelParams",
    "PumpDiscipline",
    "SystemState",
    "apply_event",
    "rate_absorption",
    "rate_detection",
    "rate_emission",
]
