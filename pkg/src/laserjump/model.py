"""Parameters, microstate and jump rates of the atom/field/detector process.

The stimulated-rate proportionality constant is fixed to 1, so ``loss_rate``
and ``pump_rate`` are expressed in those time units.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BoundsViolation, ConfigError

__all__ = [
    "PumpDiscipline",
    "EventKind",
    "ModelParams",
    "SystemState",
    "EventTrace",
    "rate_emission",
    "rate_absorption",
    "rate_detection",
    "apply_event",
    "KIND_CODES",
    "DN",
    "DM",
]


class PumpDiscipline(str, enum.Enum):
    QUIET = "quiet"
    POISSON = "poisson"


class EventKind(enum.IntEnum):
    EMISSION = 0
    ABSORPTION = 1
    DETECTION = 2
    PUMP = 3

    @property
    def code(self) -> str:
        return KIND_CODES[self]

    @classmethod
    def from_code(cls, code: str) -> "EventKind":
        try:
            return cls(KIND_CODES.index(code))
        except ValueError:
            raise ValueError(f"unknown event code {code!r}") from None


# Single-letter codes used in trace files, indexed by EventKind value.
KIND_CODES = ("E", "A", "Q", "P")

# (dn, dm) increments per kind, indexed by EventKind value.
DN = np.array([-1, 1, 0, 1], dtype=np.int64)
DM = np.array([1, -1, -1, 0], dtype=np.int64)


@dataclass(frozen=True)
class ModelParams:
    """Atom count ``n_atoms`` (N), loss rate alpha, pump rate J."""

    n_atoms: int
    loss_rate: float = 0.0
    pump_rate: float = 0.0
    pump_discipline: PumpDiscipline = PumpDiscipline.QUIET

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ConfigError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if not self.loss_rate >= 0:
            raise ConfigError(f"loss_rate must be >= 0, got {self.loss_rate!r}")
        if not self.pump_rate >= 0:
            raise ConfigError(f"pump_rate must be >= 0, got {self.pump_rate!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        object.__setattr__(self, "loss_rate", float(self.loss_rate))
        object.__setattr__(self, "pump_rate", float(self.pump_rate))
        object.__setattr__(self, "pump_discipline", PumpDiscipline(self.pump_discipline))

    @property
    def is_closed(self) -> bool:
        return self.loss_rate == 0 and self.pump_rate == 0

    def to_dict(self) -> dict:
        return {
            "n_atoms": self.n_atoms,
            "loss_rate": self.loss_rate,
            "pump_rate": self.pump_rate,
            "pump_discipline": self.pump_discipline.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(**d)


@dataclass(frozen=True)
class SystemState:
    n_upper: int
    m_quanta: int
    t: float = 0.0

    @property
    def energy(self) -> int:
        return self.n_upper + self.m_quanta

    def check(self, n_atoms: int) -> None:
        if not (0 <= self.n_upper <= n_atoms) or self.m_quanta < 0:
            raise BoundsViolation(
                f"state (n={self.n_upper}, m={self.m_quanta}) outside 0<=n<={n_atoms}, m>=0"
            )


@dataclass(frozen=True, eq=False)
class EventTrace:
    """Ordered jump record of one run.

    ``times`` and ``kinds`` are parallel arrays; ``kinds`` holds
    :class:`EventKind` integer values. ``initial`` is the state at t=0 and
    ``blocked_pumps`` counts pump arrivals that found every atom excited.
    """

    times: np.ndarray
    kinds: np.ndarray
    duration: float
    params: ModelParams
    seed: int
    initial: SystemState = field(default_factory=lambda: SystemState(0, 0))
    blocked_pumps: int = 0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def events(self) -> list[tuple[float, EventKind]]:
        return [(float(t), EventKind(int(k))) for t, k in zip(self.times, self.kinds)]

    def times_of(self, kind: EventKind) -> np.ndarray:
        return self.times[self.kinds == kind]

    @property
    def detection_times(self) -> np.ndarray:
        return self.times_of(EventKind.DETECTION)

    def states(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (n, m) right after each event."""
        n = self.initial.n_upper + np.cumsum(DN[self.kinds])
        m = self.initial.m_quanta + np.cumsum(DM[self.kinds])
        return n, m

    def state_at(self, t: float) -> SystemState:
        i = int(np.searchsorted(self.times, t, side="right"))
        if i == 0:
            return SystemState(self.initial.n_upper, self.initial.m_quanta, t)
        k = self.kinds[:i]
        return SystemState(
            self.initial.n_upper + int(DN[k].sum()),
            self.initial.m_quanta + int(DM[k].sum()),
            t,
        )

    def after(self, t0: float) -> "EventTrace":
        """Drop events before ``t0`` and rebase the clock so ``t0`` becomes 0."""
        if not 0 <= t0 < self.duration:
            raise ValueError(f"burn-in {t0} outside [0, {self.duration})")
        start = self.state_at(t0)
        keep = self.times > t0
        return replace(
            self,
            times=self.times[keep] - t0,
            kinds=self.kinds[keep],
            duration=self.duration - t0,
            initial=SystemState(start.n_upper, start.m_quanta, 0.0),
        )


def rate_emission(state: SystemState) -> float:
    """Stimulated plus spontaneous emission rate n(m+1)."""
    return float(state.n_upper * (state.m_quanta + 1))


def rate_absorption(state: SystemState, params: ModelParams) -> float:
    return float((params.n_atoms - state.n_upper) * state.m_quanta)


def rate_detection(state: SystemState, params: ModelParams) -> float:
    return params.loss_rate * state.m_quanta


def apply_event(state: SystemState, kind: EventKind, n_atoms: int) -> SystemState:
    """Apply one jump; the clock is left for the caller to advance."""
    kind = EventKind(kind)
    new = SystemState(
        state.n_upper + int(DN[kind]), state.m_quanta + int(DM[kind]), state.t
    )
    new.check(n_atoms)
    return new
