"""Per-agent mixture of experts: linear scorers, hard top-1 gating, and a
multiplicative-weights gate update driven by per-sample rewards.

Expert parameters are fixed at construction; only the gate learns. The
update is deterministic: the used expert's gate weight is multiplied by
``exp(learning_rate * reward)`` and the vector is renormalized, so a
stream of +1 rewards makes an expert's weight approach 1 geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .domain import Agent, AgentStatus, ComputationError, ConfigError, LifecycleError


@dataclass(frozen=True, slots=True)
class Expert:
    """Linear scorer: fraud verdict iff dot(weights, features) >= threshold.

    ``profile`` lives in modality space and encodes which input
    modalities this expert understands; the gate matches it against a
    sample's modality vector.
    """

    profile: tuple[float, ...]
    weights: tuple[float, ...]
    threshold: float

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.profile):
            raise ConfigError("expert profile entries must be non-negative")


@dataclass(frozen=True, slots=True)
class MoEState:
    experts: tuple[Expert, ...]
    gate_weights: tuple[float, ...]
    learning_rate: float = 0.05

    def __post_init__(self) -> None:
        if not self.experts:
            raise ConfigError("an agent needs at least one expert")
        if len(self.gate_weights) != len(self.experts):
            raise ConfigError("gate_weights length must match expert count")
        # Non-negative rather than strictly positive: a starved expert's
        # weight may underflow to 0.0 after enough renormalizations.
        if any(w < 0 for w in self.gate_weights) or sum(self.gate_weights) <= 0:
            raise ConfigError("gate weights must be non-negative with positive sum")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


def uniform_moe(experts: tuple[Expert, ...], learning_rate: float = 0.05) -> MoEState:
    n = len(experts)
    if n == 0:
        raise ConfigError("an agent needs at least one expert")
    return MoEState(experts=experts, gate_weights=(1.0 / n,) * n, learning_rate=learning_rate)


def gate(moe: MoEState, modality: tuple[float, ...]) -> int:
    """Route a sample to one expert.

    Returns the index maximizing gate_weight * dot(profile, modality);
    ties break toward the lowest index. Pure: no state is touched.
    """
    best_idx = 0
    best_aff = -math.inf
    for idx, expert in enumerate(moe.experts):
        if len(expert.profile) != len(modality):
            raise ConfigError(
                f"modality length {len(modality)} != profile length {len(expert.profile)}"
            )
        aff = moe.gate_weights[idx] * _dot(expert.profile, modality)
        if aff > best_aff:
            best_aff = aff
            best_idx = idx
    return best_idx


def expert_score(expert: Expert, features: tuple[float, ...]) -> tuple[float, bool]:
    """Score a feature vector; verdict is fraud iff score >= threshold."""
    if len(expert.weights) != len(features):
        raise ConfigError(
            f"feature length {len(features)} != weight length {len(expert.weights)}"
        )
    score = _dot(expert.weights, features)
    return score, score >= expert.threshold


def rl_update(moe: MoEState, expert_used: int, sample_reward: float) -> MoEState:
    """Multiplicative-weights step on the gate for one sample outcome.

    The used expert's weight is scaled by exp(eta * reward) and the
    vector renormalized to sum 1. Positive rewards reinforce the route
    that produced them; a zero reward is a no-op.
    """
    if not -1.0 <= sample_reward <= 1.0:
        raise ComputationError(f"sample_reward {sample_reward} outside [-1, 1]")
    weights = list(moe.gate_weights)
    weights[expert_used] *= math.exp(moe.learning_rate * sample_reward)
    total = sum(weights)
    return replace(moe, gate_weights=tuple(w / total for w in weights))


def moe_init(agent: Agent) -> Agent:
    """Reset a probationary agent's gate to uniform, keeping its experts.

    Idempotent; applied on the agent's first probation transition pass.
    """
    if agent.status is not AgentStatus.PROBATIONARY:
        raise LifecycleError(f"moe_init on agent {agent.id} with status {agent.status.value}")
    n = len(agent.moe.experts)
    agent.moe = replace(agent.moe, gate_weights=(1.0 / n,) * n)
    return agent


def _dot(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    return sum(x * y for x, y in zip(a, b))
