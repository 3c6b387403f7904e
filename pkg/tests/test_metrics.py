"""Confusion bookkeeping and F1 evaluation."""

import random

import pytest
from hypothesis import given, strategies as st

from freeagent.domain import (
    AccessTier,
    Agent,
    AgentStatus,
    DataSample,
    Decision,
)
from freeagent.metrics import (
    PerformanceLog,
    evaluate_fraud_performance,
    f1_from_counts,
    update_fraud_metrics,
)
from freeagent.moe import Expert, uniform_moe


def f1_oracle(tp: int, fp: int, fn: int) -> float:
    """Independent harmonic-mean identity: F1 = 2TP / (2TP + FP + FN)."""
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def make_agent(agent_id=0, cost=1.0):
    return Agent(
        id=agent_id,
        role="FraudDetection",
        skills=frozenset({"fraud"}),
        status=AgentStatus.ACTIVE,
        access_tier=AccessTier.FULL,
        moe=uniform_moe((Expert(profile=(1.0,), weights=(1.0,), threshold=0.0),)),
        cost_per_sample=cost,
    )


def sample(label: bool) -> DataSample:
    return DataSample(seq=0, features=(0.0,) * 6, modality=(1.0, 0.0, 0.0), label=label, pattern="A")


def decision(verdict: bool) -> Decision:
    return Decision(verdict=verdict, score=0.0, expert_used=0, shadow=False)


class TestUpdateFraudMetrics:
    @pytest.mark.parametrize(
        "verdict,label,counter",
        [
            (True, True, "true_positives"),
            (True, False, "false_positives"),
            (False, True, "false_negatives"),
            (False, False, "true_negatives"),
        ],
    )
    def test_exactly_one_counter_moves(self, verdict, label, counter):
        log = PerformanceLog()
        agent = make_agent()
        update_fraud_metrics(log, agent, sample(label), decision(verdict))
        win = log.window(agent.id)
        for name in ("true_positives", "false_positives", "false_negatives", "true_negatives"):
            assert getattr(win, name) == (1 if name == counter else 0)
        assert win.samples_seen == 1

    def test_cost_accumulates_per_sample(self):
        log = PerformanceLog()
        agent = make_agent(cost=0.25)
        for _ in range(4):
            update_fraud_metrics(log, agent, sample(True), decision(True))
        assert log.window(agent.id).cost_accumulated == pytest.approx(1.0)

    def test_confusion_sum_equals_decided(self):
        log = PerformanceLog()
        agent = make_agent()
        rng = random.Random(7)
        n = 200
        for _ in range(n):
            update_fraud_metrics(
                log, agent, sample(rng.random() < 0.5), decision(rng.random() < 0.5)
            )
        win = log.window(agent.id)
        assert win.decided() == n == win.samples_seen


class TestF1:
    def test_balanced_example(self):
        assert f1_from_counts(8, 2, 2) == pytest.approx(0.8, abs=1e-12)

    def test_all_zero_window_is_zero(self):
        assert f1_from_counts(0, 0, 0) == 0.0

    def test_perfect_detection(self):
        assert f1_from_counts(5, 0, 0) == 1.0

    def test_uneven_example(self):
        # P=0.5, R=0.25 -> F1=1/3
        assert f1_from_counts(1, 1, 3) == pytest.approx(1.0 / 3.0, abs=1e-12)

    @given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
    def test_matches_harmonic_oracle(self, tp, fp, fn):
        assert abs(f1_from_counts(tp, fp, fn) - f1_oracle(tp, fp, fn)) < 1e-12

    @given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
    def test_bounded_and_one_only_when_clean(self, tp, fp, fn):
        f1 = f1_from_counts(tp, fp, fn)
        assert 0.0 <= f1 <= 1.0
        assert (f1 == 1.0) == (fp == 0 and fn == 0 and tp > 0)


class TestEvaluate:
    def test_sets_performance_and_emits_event(self):
        log = PerformanceLog()
        agent = make_agent()
        win = log.window(agent.id)
        win.true_positives, win.false_positives, win.false_negatives = 8, 2, 2
        events = []
        result = evaluate_fraud_performance(agent, log, cycle=3, events=events)
        assert result == pytest.approx(0.8)
        assert agent.performance == pytest.approx(0.8)
        assert len(events) == 1
        assert events[0].kind.value == "Evaluate"
        assert events[0].cycle == 3
        assert events[0].performance_snapshot == pytest.approx(0.8)

    def test_empty_window_evaluates_to_zero(self):
        log = PerformanceLog()
        agent = make_agent()
        events = []
        assert evaluate_fraud_performance(agent, log, 0, events) == 0.0
        assert agent.performance == 0.0


def test_window_reset_clears_everything():
    log = PerformanceLog()
    agent = make_agent()
    update_fraud_metrics(log, agent, sample(True), decision(True))
    log.record_handoff(agent.id, True)
    log.record_violation(agent.id)
    log.reset_all()
    win = log.window(agent.id)
    assert win.decided() == 0
    assert win.handoffs_attempted == 0
    assert win.violations == 0
