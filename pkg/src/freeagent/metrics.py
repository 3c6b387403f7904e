"""Per-agent detection bookkeeping and F1 evaluation.

Windows are tumbling: the engine resets all counters after each
evaluation pass, so every evaluation reflects only the cycle just
processed (which is what makes drift visible quickly).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .domain import Agent, AgentId, DataSample, Decision, EventKind, RosterEvent


@dataclass(slots=True)
class AgentWindow:
    """Confusion counters plus handoff/cost/violation tallies for one agent."""

    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0
    true_negatives: int = 0
    samples_seen: int = 0
    handoffs_attempted: int = 0
    handoffs_succeeded: int = 0
    cost_accumulated: float = 0.0
    violations: int = 0

    def decided(self) -> int:
        return (
            self.true_positives
            + self.false_positives
            + self.false_negatives
            + self.true_negatives
        )

    def accuracy(self) -> float:
        if self.samples_seen == 0:
            return 0.0
        return (self.true_positives + self.true_negatives) / self.samples_seen


@dataclass
class PerformanceLog:
    """Per-AgentId windows; counters reset together at window boundaries."""

    windows: dict[AgentId, AgentWindow] = field(default_factory=dict)

    def window(self, agent: AgentId) -> AgentWindow:
        win = self.windows.get(agent)
        if win is None:
            win = AgentWindow()
            self.windows[agent] = win
        return win

    def record_handoff(self, agent: AgentId, succeeded: bool) -> None:
        win = self.window(agent)
        win.handoffs_attempted += 1
        if succeeded:
            win.handoffs_succeeded += 1

    def record_violation(self, agent: AgentId) -> None:
        self.window(agent).violations += 1

    def reset_all(self) -> None:
        self.windows.clear()


def update_fraud_metrics(
    log: PerformanceLog, agent: Agent, sample: DataSample, decision: Decision
) -> None:
    """Record one decided sample: exactly one confusion counter moves."""
    win = log.window(agent.id)
    if decision.verdict and sample.label:
        win.true_positives += 1
    elif decision.verdict and not sample.label:
        win.false_positives += 1
    elif not decision.verdict and sample.label:
        win.false_negatives += 1
    else:
        win.true_negatives += 1
    win.samples_seen += 1
    win.cost_accumulated += agent.cost_per_sample


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    """F1 via precision and recall, with 0/0 ratios defined as 0.

    When precision + recall is 0 the result is 0, which keeps the
    function total on all-zero windows.
    """
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate_fraud_performance(
    agent: Agent, log: PerformanceLog, cycle: int, events: list[RosterEvent]
) -> float:
    """Set agent.performance to the F1 of its current window and audit it."""
    win = log.window(agent.id)
    score = f1_from_counts(win.true_positives, win.false_positives, win.false_negatives)
    agent.performance = score
    events.append(
        RosterEvent(
            cycle=cycle,
            kind=EventKind.EVALUATE,
            agent=agent.id,
            detail=(
                f"tp={win.true_positives} fp={win.false_positives} "
                f"fn={win.false_negatives} tn={win.true_negatives}"
            ),
            performance_snapshot=score,
        )
    )
    return score
