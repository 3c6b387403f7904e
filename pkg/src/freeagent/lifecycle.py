"""Roster state machine: evaluate-and-release, vacancy filling, probation
transitions, and service-time accounting.

All operations mutate the (roster, pool) pair in place, append audit
events, and iterate agents in ascending id order so runs are
deterministic. The roster and pool are disjoint at every step; every
transition is visible as exactly one Release/FreeAgency/Sign/Promote
event, which is what makes event-log replay possible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .domain import (
    Agent,
    AgentId,
    AgentStatus,
    ConfigError,
    EventKind,
    RosterEvent,
)
from .metrics import PerformanceLog, evaluate_fraud_performance
from .moe import moe_init

logger = logging.getLogger("freeagent.lifecycle")


@dataclass(frozen=True, slots=True)
class LifecycleConfig:
    """Release and probation policy.

    ``sustain_window`` is the number of consecutive below-threshold
    evaluations before release; 1 reproduces immediate-release
    semantics. ``reward_threshold``, when set, makes a sub-threshold
    cycle reward count as "below" too.
    """

    release_threshold: float = 0.80
    reward_threshold: float | None = None
    sustain_window: int = 3
    max_service_time: int = 50
    keep_service_time_on_resign: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.release_threshold <= 1.0:
            raise ConfigError("release_threshold must be in [0, 1]")
        if self.sustain_window < 1:
            raise ConfigError("sustain_window must be >= 1")
        if self.max_service_time < 1:
            raise ConfigError("max_service_time must be >= 1")


@dataclass(frozen=True, slots=True)
class VacantRole:
    role: str
    required_skills: frozenset[str]


def vacant_roles(
    roster: dict[AgentId, Agent], roles: tuple[tuple[str, frozenset[str]], ...]
) -> list[VacantRole]:
    """A role is vacant iff no Active or Probationary agent fills it."""
    filled = {
        agent.role
        for agent in roster.values()
        if agent.status in (AgentStatus.ACTIVE, AgentStatus.PROBATIONARY)
    }
    return [
        VacantRole(role=name, required_skills=skills)
        for name, skills in roles
        if name not in filled
    ]


def _release(
    agent: Agent,
    roster: dict[AgentId, Agent],
    pool: list[Agent],
    kind: EventKind,
    cycle: int,
    detail: str,
    events: list[RosterEvent],
) -> None:
    agent.set_status(AgentStatus.RELEASED)
    agent.consecutive_below = 0
    del roster[agent.id]
    pool.append(agent)
    events.append(
        RosterEvent(
            cycle=cycle,
            kind=kind,
            agent=agent.id,
            detail=detail,
            performance_snapshot=agent.performance,
        )
    )


def evaluate_and_release(
    roster: dict[AgentId, Agent],
    pool: list[Agent],
    log: PerformanceLog,
    cfg: LifecycleConfig,
    cycle: int,
    events: list[RosterEvent],
    rewards: dict[AgentId, float] | None = None,
) -> None:
    """Evaluate every roster agent and move sustained underperformers
    (or agents past the service cap) to the pool.

    A cycle counts as "below" when F1 drops under the release threshold,
    or when the cycle reward drops under the optional reward threshold.
    Underperformance takes precedence over the service cap when both
    trigger at once.
    """
    for agent_id in sorted(roster):
        agent = roster[agent_id]
        performance = evaluate_fraud_performance(agent, log, cycle, events)

        below = performance < cfg.release_threshold
        if cfg.reward_threshold is not None and rewards is not None:
            reward = rewards.get(agent_id)
            if reward is not None and reward < cfg.reward_threshold:
                below = True

        agent.consecutive_below = agent.consecutive_below + 1 if below else 0

        if agent.consecutive_below >= cfg.sustain_window:
            _release(
                agent, roster, pool, EventKind.RELEASE, cycle,
                f"below threshold {cfg.release_threshold} for "
                f"{agent.consecutive_below} consecutive evaluations",
                events,
            )
        elif agent.service_time >= cfg.max_service_time:
            _release(
                agent, roster, pool, EventKind.FREE_AGENCY, cycle,
                f"service_time {agent.service_time} >= cap {cfg.max_service_time}",
                events,
            )


def fill_vacant_roles(
    roster: dict[AgentId, Agent],
    pool: list[Agent],
    vacancies: list[VacantRole],
    cfg: LifecycleConfig,
    cycle: int,
    events: list[RosterEvent],
) -> list[AgentId]:
    """Sign the best qualified pool agent into each vacancy.

    Qualification is a skills superset match; selection is by highest
    last-known performance with ties to the lowest id. An unfillable
    vacancy is logged and left open. Returns the signed agent ids.
    """
    signed: list[AgentId] = []
    for vacancy in vacancies:
        candidates = [a for a in pool if a.skills >= vacancy.required_skills]
        if not candidates:
            logger.warning(
                "cycle %d: vacancy %s unfilled, no pool candidate with skills %s",
                cycle, vacancy.role, sorted(vacancy.required_skills),
            )
            continue
        best = min(candidates, key=lambda a: (-a.performance, a.id))
        pool.remove(best)
        best.set_status(AgentStatus.PROBATIONARY)
        best.role = vacancy.role
        best.consecutive_below = 0
        if not cfg.keep_service_time_on_resign:
            best.service_time = 0
        roster[best.id] = best
        signed.append(best.id)
        events.append(
            RosterEvent(
                cycle=cycle,
                kind=EventKind.SIGN,
                agent=best.id,
                detail=f"signed for role {vacancy.role}",
                performance_snapshot=best.performance,
            )
        )
    return signed


def transition_probationary(
    roster: dict[AgentId, Agent],
    pool: list[Agent],
    log: PerformanceLog,
    cfg: LifecycleConfig,
    cycle: int,
    events: list[RosterEvent],
    eligible: set[AgentId] | None = None,
) -> None:
    """Promote or re-release probationary agents on their shadow window.

    Each eligible agent first has its gate reset to uniform (the moe
    init of the first transition pass), is then evaluated on the shadow
    metrics it accumulated this cycle, and either becomes a full Active
    member or returns to the pool. Agents signed this same cycle have no
    shadow window yet and must not be in ``eligible``.
    """
    for agent_id in sorted(roster):
        agent = roster[agent_id]
        if agent.status is not AgentStatus.PROBATIONARY:
            continue
        if eligible is not None and agent_id not in eligible:
            continue
        moe_init(agent)
        performance = evaluate_fraud_performance(agent, log, cycle, events)
        if performance >= cfg.release_threshold:
            agent.set_status(AgentStatus.ACTIVE)
            agent.consecutive_below = 0
            events.append(
                RosterEvent(
                    cycle=cycle,
                    kind=EventKind.PROMOTE,
                    agent=agent_id,
                    detail=f"shadow performance {performance:.4f} >= {cfg.release_threshold}",
                    performance_snapshot=performance,
                )
            )
        else:
            _release(
                agent, roster, pool, EventKind.RELEASE, cycle,
                f"failed probation at {performance:.4f} < {cfg.release_threshold}",
                events,
            )


def increment_service_time(
    roster: dict[AgentId, Agent], cycle: int, events: list[RosterEvent]
) -> None:
    """End-of-cycle tick: every roster agent (Active or Probationary)
    gains exactly one cycle of service; pool agents are untouched."""
    for agent_id in sorted(roster):
        agent = roster[agent_id]
        agent.service_time += 1
        events.append(
            RosterEvent(
                cycle=cycle,
                kind=EventKind.SERVICE_TICK,
                agent=agent_id,
                detail=f"service_time={agent.service_time}",
                performance_snapshot=agent.performance,
            )
        )


def enforce_service_cap(
    roster: dict[AgentId, Agent],
    pool: list[Agent],
    cfg: LifecycleConfig,
    cycle: int,
    events: list[RosterEvent],
) -> None:
    """Post-tick sweep so no roster agent ever ends a cycle at or past
    the service cap; anyone who just reached it becomes a free agent."""
    for agent_id in sorted(roster):
        agent = roster[agent_id]
        if agent.service_time >= cfg.max_service_time:
            _release(
                agent, roster, pool, EventKind.FREE_AGENCY, cycle,
                f"service_time {agent.service_time} reached cap {cfg.max_service_time}",
                events,
            )
