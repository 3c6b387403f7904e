"""Core identifiers, enumerations, and value types shared by every module.

All of these are passive records: they carry no behaviour beyond light
derivation helpers, and all mutation happens inside the single-threaded
engine loop. Safe to copy between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

# Fixed layout of the feature space. The last three feature entries are
# "sensitive": visible only at Full access tier (see pipeline.redact).
FEATURE_DIM = 6
SENSITIVE_START = 3
MODALITY_DIM = 3

AgentId = int


class ConfigError(ValueError):
    """Invalid configuration: bad dimensions, bad ranges, unknown keys."""


class LifecycleError(RuntimeError):
    """An operation was applied to an agent in the wrong lifecycle state."""


class ComputationError(ValueError):
    """Numeric inputs outside the contract (non-finite, out of range)."""


class AgentStatus(str, Enum):
    ACTIVE = "Active"
    PROBATIONARY = "Probationary"
    RELEASED = "Released"


class AccessTier(IntEnum):
    SANDBOX = 0
    RESTRICTED = 1
    FULL = 2


def tier_for_status(status: AgentStatus) -> AccessTier:
    """Access tier is a pure function of lifecycle status."""
    return {
        AgentStatus.RELEASED: AccessTier.SANDBOX,
        AgentStatus.PROBATIONARY: AccessTier.RESTRICTED,
        AgentStatus.ACTIVE: AccessTier.FULL,
    }[status]


class EventKind(str, Enum):
    EVALUATE = "Evaluate"
    RELEASE = "Release"
    SIGN = "Sign"
    PROMOTE = "Promote"
    SERVICE_TICK = "ServiceTick"
    FREE_AGENCY = "FreeAgency"


@dataclass(slots=True)
class Agent:
    """One roster or pool member.

    ``performance`` is always the output of the most recent evaluation
    (0.0 before the first). ``service_time`` counts completed roster
    cycles and never decreases while the agent is not Released.
    """

    id: AgentId
    role: str
    skills: frozenset[str]
    status: AgentStatus
    access_tier: AccessTier
    moe: "MoEState"  # noqa: F821 - resolved at runtime via moe module
    service_time: int = 0
    performance: float = 0.0
    consecutive_below: int = 0
    cost_per_sample: float = 1.0
    handoff_reliability: float = 1.0

    def set_status(self, status: AgentStatus) -> None:
        self.status = status
        self.access_tier = tier_for_status(status)


@dataclass(frozen=True, slots=True)
class DataSample:
    """One transaction/message drawn from the stream.

    ``label`` and ``pattern`` are ground truth for metrics and reward
    only; agents never see them (the decision path takes features and
    modality, nothing else).
    """

    seq: int
    features: tuple[float, ...]
    modality: tuple[float, ...]
    label: bool
    pattern: str


@dataclass(frozen=True, slots=True)
class Decision:
    verdict: bool
    score: float
    expert_used: int
    shadow: bool


@dataclass(frozen=True, slots=True)
class RosterEvent:
    """Audit record of one roster transition or evaluation."""

    cycle: int
    kind: EventKind
    agent: AgentId
    detail: str = ""
    performance_snapshot: float = 0.0

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "kind": self.kind.value,
            "agent": self.agent,
            "detail": self.detail,
            "performance_snapshot": self.performance_snapshot,
        }
