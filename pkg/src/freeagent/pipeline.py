"""Per-sample dispatch: pick the best active detector, run probationary
agents in shadow, enforce tiered redaction, and act on fraud verdicts.

Shadow decisions never trigger actions and shadow agents only ever see
Restricted-tier data; both properties are auditable from the detection
log. Actions are recorded, not executed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

from .domain import (
    SENSITIVE_START,
    AccessTier,
    Agent,
    AgentId,
    AgentStatus,
    DataSample,
    Decision,
)
from .metrics import PerformanceLog, update_fraud_metrics
from .moe import expert_score, gate
from .simulator import KeyedRng

logger = logging.getLogger("freeagent.pipeline")


class Action:
    BLOCK = "Block"
    ALERT = "Alert"
    NONE = "None"


@dataclass(frozen=True, slots=True)
class ActionRecord:
    seq: int
    action: str
    acting_agent: AgentId


@dataclass(frozen=True, slots=True)
class DetectionRecord:
    """One row of the optional detections log."""

    seq: int
    agent: AgentId
    verdict: bool
    score: float
    shadow: bool
    action: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "agent": self.agent,
            "verdict": self.verdict,
            "score": self.score,
            "shadow": self.shadow,
            "action": self.action,
        }


def select_fraud_agent(roster: dict[AgentId, Agent], role: str = "FraudDetection") -> AgentId | None:
    """Best Active agent for the role: highest performance, then lowest id.

    Probationary agents are never assigned; they shadow instead. Returns
    None when no Active agent carries the role.
    """
    best: Agent | None = None
    for agent_id in sorted(roster):
        agent = roster[agent_id]
        if agent.status is not AgentStatus.ACTIVE or agent.role != role:
            continue
        if best is None or agent.performance > best.performance:
            best = agent
    return None if best is None else best.id


def quantize_coarse(value: float) -> float:
    """Round to 1 decimal, halves away from zero (the sandbox obfuscation)."""
    return math.copysign(math.floor(abs(value) * 10.0 + 0.5), value) / 10.0


def redact(sample: DataSample, tier: AccessTier) -> DataSample:
    """Apply tiered visibility to a sample's features.

    Full sees everything; Restricted loses the sensitive suffix; Sandbox
    additionally sees only coarsened values of the remaining features.
    Labels and patterns ride along for bookkeeping but the decision path
    never reads them (see decide).
    """
    if tier is AccessTier.FULL:
        return sample
    visible = list(sample.features[:SENSITIVE_START])
    if tier is AccessTier.SANDBOX:
        visible = [quantize_coarse(v) for v in visible]
    features = tuple(visible) + (0.0,) * (len(sample.features) - SENSITIVE_START)
    return replace(sample, features=features)


def decide(agent: Agent, features: tuple[float, ...], modality: tuple[float, ...]) -> Decision:
    """Route through the agent's gate and score with the chosen expert.

    Takes bare feature/modality vectors so a decision cannot depend on
    anything else in the sample.
    """
    idx = gate(agent.moe, modality)
    score, verdict = expert_score(agent.moe.experts[idx], features)
    return Decision(
        verdict=verdict,
        score=score,
        expert_used=idx,
        shadow=agent.status is AgentStatus.PROBATIONARY,
    )


@dataclass
class SampleOutcome:
    decision: Decision | None
    assigned_agent: AgentId | None
    shadow_decisions: dict[AgentId, Decision]
    action: ActionRecord | None


class CyclePipeline:
    """Processes one cycle's batch against a fixed roster snapshot.

    Handoff success is drawn per dispatch from a Philox stream keyed on
    (seed, cycle, agent), so outcomes are reproducible and independent of
    processing order. A failed handoff counts as attempted and skips the
    sample for that agent only; the dispatcher then falls through to the
    next-best active agent.
    """

    def __init__(
        self,
        roster: dict[AgentId, Agent],
        log: PerformanceLog,
        seed: int,
        cycle: int,
        misbehaving: frozenset[AgentId] = frozenset(),
        role: str = "FraudDetection",
    ) -> None:
        self.roster = roster
        self.log = log
        self.cycle = cycle
        self.misbehaving = misbehaving
        self.role = role
        self.rewards: dict[AgentId, list[tuple[int, float]]] = {}
        self.actions: list[ActionRecord] = []
        self.detections: list[DetectionRecord] = []
        self.stalled_samples = 0
        self._handoff_rngs: dict[AgentId, KeyedRng] = {}
        self._seed = seed
        # Membership is fixed for the duration of the batch; performance
        # only changes at evaluation time, so the dispatch order is too.
        self._active = sorted(
            (a for a in roster.values() if a.status is AgentStatus.ACTIVE and a.role == role),
            key=lambda a: (-a.performance, a.id),
        )
        self._shadows = sorted(
            (a for a in roster.values() if a.status is AgentStatus.PROBATIONARY and a.role == role),
            key=lambda a: a.id,
        )

    def _handoff_ok(self, agent: Agent) -> bool:
        if agent.handoff_reliability >= 1.0:
            self.log.record_handoff(agent.id, True)
            return True
        rng = self._handoff_rngs.get(agent.id)
        if rng is None:
            rng = KeyedRng()
            rng.reset("handoff", self._seed, self.cycle, agent.id)
            self._handoff_rngs[agent.id] = rng
        ok = bool(rng.generator.random() < agent.handoff_reliability)
        self.log.record_handoff(agent.id, ok)
        return ok

    def _agent_decision(self, agent: Agent, sample: DataSample) -> Decision:
        if agent.id in self.misbehaving and agent.access_tier is not AccessTier.FULL:
            # Audit hook: the agent tried to read the raw sample. The
            # attempt is blocked and tallied; the decision still runs on
            # redacted data.
            self.log.record_violation(agent.id)
        red = redact(sample, agent.access_tier)
        decision = decide(agent, red.features, red.modality)
        update_fraud_metrics(self.log, agent, sample, decision)
        self.rewards.setdefault(agent.id, []).append(
            (decision.expert_used, 1.0 if decision.verdict == sample.label else -1.0)
        )
        return decision

    def process_sample(self, sample: DataSample) -> SampleOutcome:
        assigned_decision: Decision | None = None
        assigned_id: AgentId | None = None

        # Dispatch down the performance ranking until a handoff succeeds.
        for agent in self._active:
            if self._handoff_ok(agent):
                assigned_id = agent.id
                assigned_decision = self._agent_decision(agent, sample)
                break

        action: ActionRecord | None = None
        if assigned_decision is not None and assigned_decision.verdict:
            action = ActionRecord(seq=sample.seq, action=Action.BLOCK, acting_agent=assigned_id)
            self.actions.append(action)
        if not self._active:
            self.stalled_samples += 1

        if assigned_decision is not None:
            self.detections.append(
                DetectionRecord(
                    seq=sample.seq,
                    agent=assigned_id,
                    verdict=assigned_decision.verdict,
                    score=assigned_decision.score,
                    shadow=False,
                    action=action.action if action else Action.NONE,
                )
            )

        shadow_decisions: dict[AgentId, Decision] = {}
        for agent in self._shadows:
            if not self._handoff_ok(agent):
                continue
            decision = self._agent_decision(agent, sample)
            shadow_decisions[agent.id] = decision
            self.detections.append(
                DetectionRecord(
                    seq=sample.seq,
                    agent=agent.id,
                    verdict=decision.verdict,
                    score=decision.score,
                    shadow=True,
                    action=Action.NONE,
                )
            )

        return SampleOutcome(
            decision=assigned_decision,
            assigned_agent=assigned_id,
            shadow_decisions=shadow_decisions,
            action=action,
        )

    def run_batch(self, samples: list[DataSample]) -> list[SampleOutcome]:
        outcomes = [self.process_sample(sample) for sample in samples]
        if self.stalled_samples:
            logger.warning(
                "cycle %d: no active %s agent; %d samples undecided (vacancy pending)",
                self.cycle,
                self.role,
                self.stalled_samples,
            )
        return outcomes
