"""Release, signing, probation, and service-time rules at the function level."""

import pytest

from freeagent.domain import AgentStatus, ConfigError, EventKind
from freeagent.lifecycle import (
    LifecycleConfig,
    VacantRole,
    enforce_service_cap,
    evaluate_and_release,
    fill_vacant_roles,
    increment_service_time,
    transition_probationary,
    vacant_roles,
)
from freeagent.metrics import PerformanceLog
from tests.test_pipeline import detector


def seeded_log(agent_id, tp, fp, fn, tn=0):
    log = PerformanceLog()
    win = log.window(agent_id)
    win.true_positives, win.false_positives = tp, fp
    win.false_negatives, win.true_negatives = fn, tn
    win.samples_seen = tp + fp + fn + tn
    return log


def window_for_f1(agent_id, f1_target, log=None):
    """Construct a window whose F1 is exactly f1_target (recall=precision)."""
    # with FP == FN, F1 == TP/(TP+FP); choose TP=round(1000*f1), FP=FN=rest
    log = log or PerformanceLog()
    tp = round(1000 * f1_target)
    bad = 1000 - tp
    win = log.window(agent_id)
    win.true_positives, win.false_positives, win.false_negatives = tp, bad, bad
    win.samples_seen = tp + 2 * bad
    return log


class TestEvaluateAndRelease:
    def test_immediate_release_below_threshold_w1(self):
        cfg = LifecycleConfig(release_threshold=0.80, sustain_window=1)
        agent = detector(0)
        roster, pool = {0: agent}, []
        events = []
        evaluate_and_release(roster, pool, window_for_f1(0, 0.79), cfg, 0, events)
        assert roster == {} and pool == [agent]
        assert agent.status is AgentStatus.RELEASED
        kinds = [e.kind for e in events]
        assert kinds == [EventKind.EVALUATE, EventKind.RELEASE]

    def test_service_cap_releases_good_performer_as_free_agency(self):
        cfg = LifecycleConfig(max_service_time=50)
        agent = detector(0)
        agent.service_time = 50
        roster, pool, events = {0: agent}, [], []
        evaluate_and_release(roster, pool, window_for_f1(0, 0.95), cfg, 0, events)
        assert pool == [agent]
        assert events[-1].kind is EventKind.FREE_AGENCY

    def test_sustain_window_not_met_retained(self):
        cfg = LifecycleConfig(sustain_window=3)
        agent = detector(0)
        agent.consecutive_below = 1  # one bad prior cycle
        roster, pool, events = {0: agent}, [], []
        evaluate_and_release(roster, pool, window_for_f1(0, 0.85), cfg, 0, events)
        assert 0 in roster
        assert agent.consecutive_below == 0  # good cycle resets the streak

    def test_streak_accumulates_to_release(self):
        cfg = LifecycleConfig(sustain_window=3)
        agent = detector(0)
        roster, pool = {0: agent}, []
        for cycle in range(3):
            events = []
            evaluate_and_release(roster, pool, window_for_f1(0, 0.5), cfg, cycle, events)
        assert pool == [agent]
        assert agent.status is AgentStatus.RELEASED

    def test_reward_threshold_counts_as_below(self):
        cfg = LifecycleConfig(release_threshold=0.5, reward_threshold=0.9, sustain_window=1)
        agent = detector(0)
        roster, pool, events = {0: agent}, [], []
        # F1 fine (0.95) but reward under tau
        evaluate_and_release(
            roster, pool, window_for_f1(0, 0.95), cfg, 0, events, rewards={0: 0.2}
        )
        assert pool == [agent]

    def test_release_precedence_over_free_agency(self):
        cfg = LifecycleConfig(sustain_window=1, max_service_time=10)
        agent = detector(0)
        agent.service_time = 10
        roster, pool, events = {0: agent}, [], []
        evaluate_and_release(roster, pool, window_for_f1(0, 0.1), cfg, 0, events)
        assert events[-1].kind is EventKind.RELEASE

    def test_ascending_id_order(self):
        cfg = LifecycleConfig(sustain_window=1)
        roster = {5: detector(5), 2: detector(2)}
        log = PerformanceLog()
        window_for_f1(5, 0.1, log)
        window_for_f1(2, 0.1, log)
        events = []
        evaluate_and_release(roster, [], log, cfg, 0, events)
        assert [e.agent for e in events] == [2, 2, 5, 5]


class TestFillVacantRoles:
    def test_skills_superset_required(self):
        a = detector(1)
        a.set_status(AgentStatus.RELEASED)
        a.skills = frozenset({"text"})
        b = detector(2)
        b.set_status(AgentStatus.RELEASED)
        b.skills = frozenset({"text", "pattern-B"})
        b.performance = 0.9
        pool = [a, b]
        roster, events = {}, []
        vac = [VacantRole("FraudDetection", frozenset({"text", "pattern-B"}))]
        signed = fill_vacant_roles(roster, pool, vac, LifecycleConfig(), 0, events)
        assert signed == [2]
        assert roster[2].status is AgentStatus.PROBATIONARY
        assert pool == [a]
        assert events[0].kind is EventKind.SIGN

    def test_best_performance_wins(self):
        # brute-force oracle over the 2-candidate set: argmax performance
        lo, hi = detector(1, performance=0.7), detector(2, performance=0.9)
        for agent in (lo, hi):
            agent.set_status(AgentStatus.RELEASED)
        expected = max([lo, hi], key=lambda a: a.performance).id
        roster, events = {}, []
        vac = [VacantRole("FraudDetection", frozenset({"fraud"}))]
        signed = fill_vacant_roles(roster, [lo, hi], vac, LifecycleConfig(), 0, events)
        assert signed == [expected]

    def test_performance_tie_breaks_to_lowest_id(self):
        a, b = detector(4, performance=0.8), detector(2, performance=0.8)
        for agent in (a, b):
            agent.set_status(AgentStatus.RELEASED)
        signed = fill_vacant_roles(
            {}, [a, b], [VacantRole("FraudDetection", frozenset())], LifecycleConfig(), 0, []
        )
        assert signed == [2]

    def test_empty_pool_leaves_vacancy(self, caplog):
        events = []
        with caplog.at_level("WARNING", logger="freeagent.lifecycle"):
            signed = fill_vacant_roles(
                {}, [], [VacantRole("FraudDetection", frozenset())], LifecycleConfig(), 0, events
            )
        assert signed == [] and events == []
        assert "unfilled" in caplog.text

    def test_service_time_reset_when_configured(self):
        agent = detector(1)
        agent.set_status(AgentStatus.RELEASED)
        agent.service_time = 7
        cfg = LifecycleConfig(keep_service_time_on_resign=False)
        fill_vacant_roles({}, [agent], [VacantRole("FraudDetection", frozenset())], cfg, 0, [])
        assert agent.service_time == 0

    def test_service_time_kept_by_default(self):
        agent = detector(1)
        agent.set_status(AgentStatus.RELEASED)
        agent.service_time = 7
        fill_vacant_roles(
            {}, [agent], [VacantRole("FraudDetection", frozenset())], LifecycleConfig(), 0, []
        )
        assert agent.service_time == 7


class TestVacancies:
    def test_vacancy_iff_role_unfilled(self):
        roles = (("FraudDetection", frozenset({"fraud"})),)
        active = detector(0)
        assert vacant_roles({0: active}, roles) == []
        prob = detector(1, status=AgentStatus.PROBATIONARY)
        assert vacant_roles({1: prob}, roles) == []
        assert len(vacant_roles({}, roles)) == 1


class TestTransitionProbationary:
    def make_prob(self, agent_id=1):
        agent = detector(agent_id, status=AgentStatus.PROBATIONARY)
        agent.moe = agent.moe.__class__(
            experts=agent.moe.experts, gate_weights=(1.0,), learning_rate=0.05
        )
        return agent

    def test_promoted_at_088(self):
        agent = self.make_prob()
        roster, pool, events = {1: agent}, [], []
        transition_probationary(roster, pool, window_for_f1(1, 0.88), LifecycleConfig(), 0, events)
        assert agent.status is AgentStatus.ACTIVE
        assert agent.access_tier.name == "FULL"
        assert events[-1].kind is EventKind.PROMOTE

    def test_released_below_threshold(self):
        agent = self.make_prob()
        roster, pool, events = {1: agent}, [], []
        transition_probationary(roster, pool, window_for_f1(1, 0.70), LifecycleConfig(), 0, events)
        assert agent.status is AgentStatus.RELEASED
        assert pool == [agent]
        assert events[-1].kind is EventKind.RELEASE

    def test_exact_threshold_promotes(self):
        agent = self.make_prob()
        roster, pool, events = {1: agent}, [], []
        transition_probationary(roster, pool, window_for_f1(1, 0.80), LifecycleConfig(), 0, events)
        assert agent.status is AgentStatus.ACTIVE

    def test_gate_reset_on_transition(self):
        agent = detector(1, status=AgentStatus.PROBATIONARY)
        moe = agent.moe
        agent.moe = moe.__class__(
            experts=moe.experts * 2, gate_weights=(0.9, 0.1), learning_rate=0.05
        )
        transition_probationary({1: agent}, [], window_for_f1(1, 0.9), LifecycleConfig(), 0, [])
        assert agent.moe.gate_weights == (0.5, 0.5)

    def test_ineligible_agent_skipped(self):
        agent = self.make_prob()
        roster, pool, events = {1: agent}, [], []
        transition_probationary(
            roster, pool, window_for_f1(1, 0.9), LifecycleConfig(), 0, events, eligible=set()
        )
        assert agent.status is AgentStatus.PROBATIONARY
        assert events == []

    def test_active_agents_untouched(self):
        agent = detector(1)
        transition_probationary({1: agent}, [], window_for_f1(1, 0.1), LifecycleConfig(), 0, [])
        assert agent.status is AgentStatus.ACTIVE


class TestServiceTime:
    def test_active_and_probationary_tick(self):
        active = detector(0)
        active.service_time = 4
        prob = detector(1, status=AgentStatus.PROBATIONARY)
        events = []
        increment_service_time({0: active, 1: prob}, 0, events)
        assert active.service_time == 5
        assert prob.service_time == 1
        assert [e.kind for e in events] == [EventKind.SERVICE_TICK] * 2

    def test_pool_agents_unchanged(self):
        pooled = detector(2, status=AgentStatus.RELEASED)
        pooled.service_time = 7
        increment_service_time({}, 0, [])
        assert pooled.service_time == 7

    def test_cap_sweep_releases_at_cap(self):
        cfg = LifecycleConfig(max_service_time=5)
        agent = detector(0)
        agent.service_time = 5
        roster, pool, events = {0: agent}, [], []
        enforce_service_cap(roster, pool, cfg, 0, events)
        assert pool == [agent]
        assert events[-1].kind is EventKind.FREE_AGENCY

    def test_cap_sweep_ignores_below_cap(self):
        cfg = LifecycleConfig(max_service_time=5)
        agent = detector(0)
        agent.service_time = 4
        roster, pool = {0: agent}, []
        enforce_service_cap(roster, pool, cfg, 0, [])
        assert 0 in roster


class TestConfigValidation:
    def test_sustain_window_zero_rejected(self):
        with pytest.raises(ConfigError):
            LifecycleConfig(sustain_window=0)

    def test_threshold_range(self):
        with pytest.raises(ConfigError):
            LifecycleConfig(release_threshold=1.5)
