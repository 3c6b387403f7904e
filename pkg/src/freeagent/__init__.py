"""Deterministic free-agency roster engine for mixture-of-experts
fraud-detection agents on a simulated drifting transaction stream."""

from .domain import (
    AccessTier,
    Agent,
    AgentId,
    AgentStatus,
    ComputationError,
    ConfigError,
    DataSample,
    Decision,
    EventKind,
    LifecycleError,
    RosterEvent,
    tier_for_status,
)
from .engine import Engine, SnapshotError, restore_engine, snapshot_state, write_snapshot
from .lifecycle import LifecycleConfig
from .moe import Expert, MoEState, expert_score, gate, moe_init, rl_update, uniform_moe
from .simulator import DriftSchedule, PatternSpec, ScenarioSpec, Segment, StreamConfig

__version__ = "0.1.0"

__all__ = [
    "AccessTier",
    "Agent",
    "AgentId",
    "AgentStatus",
    "ComputationError",
    "ConfigError",
    "DataSample",
    "Decision",
    "DriftSchedule",
    "Engine",
    "EventKind",
    "Expert",
    "LifecycleConfig",
    "LifecycleError",
    "MoEState",
    "PatternSpec",
    "RosterEvent",
    "ScenarioSpec",
    "Segment",
    "SnapshotError",
    "StreamConfig",
    "expert_score",
    "gate",
    "moe_init",
    "restore_engine",
    "rl_update",
    "snapshot_state",
    "tier_for_status",
    "uniform_moe",
    "write_snapshot",
    "__version__",
]
