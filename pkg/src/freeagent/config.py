"""Run configuration: schema, strict validation, JSON round-trip, and the
bundled scenario preset.

Configs are plain JSON. Validation is strict: unknown keys anywhere in
the tree are rejected with their dotted path, and every numeric range is
checked before any execution starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .domain import ConfigError
from .lifecycle import LifecycleConfig
from .moe import Expert
from .reward import RewardConfig, RewardWeights
from .simulator import (
    DEFAULT_SCENARIO,
    DriftSchedule,
    PatternSpec,
    ScenarioSpec,
    Segment,
    StreamConfig,
    candidate_experts,
    incumbent_experts,
    scenario_patterns,
)

CONFIG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RoleSpec:
    name: str
    required_skills: frozenset[str]


@dataclass(frozen=True)
class AgentSpec:
    """Construction recipe for one agent; ids are assigned by the engine."""

    role: str
    skills: frozenset[str]
    experts: tuple[Expert, ...]
    learning_rate: float = 0.05
    cost_per_sample: float = 1.0
    handoff_reliability: float = 1.0
    misbehaving: bool = False
    service_time: int = 0

    def __post_init__(self) -> None:
        if self.cost_per_sample <= 0:
            raise ConfigError("cost_per_sample must be positive")
        if not 0.0 <= self.handoff_reliability <= 1.0:
            raise ConfigError("handoff_reliability must be in [0, 1]")
        if self.service_time < 0:
            raise ConfigError("service_time must be non-negative")
        if not self.experts:
            raise ConfigError("agent spec needs at least one expert")


@dataclass(frozen=True)
class RunConfig:
    stream: StreamConfig
    lifecycle: LifecycleConfig = field(default_factory=LifecycleConfig)
    reward_weights: RewardWeights = field(default_factory=RewardWeights)
    reward_config: RewardConfig = field(default_factory=RewardConfig)
    roles: tuple[RoleSpec, ...] = ()
    roster: tuple[AgentSpec, ...] = ()
    pool: tuple[AgentSpec, ...] = ()
    emit_detections: bool = False
    snapshot_interval: int = 0

    def __post_init__(self) -> None:
        if self.snapshot_interval < 0:
            raise ConfigError("snapshot_interval must be >= 0")
        names = [r.name for r in self.roles]
        if len(names) != len(set(names)):
            raise ConfigError("duplicate role names")


# ---------------------------------------------------------------------------
# Strict dict parsing
# ---------------------------------------------------------------------------

def _check_keys(node: dict, allowed: set[str], path: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _require(node: dict, key: str, path: str):
    if key not in node:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return node[key]


def _parse_pattern(node: dict, path: str) -> PatternSpec:
    _check_keys(node, {"name", "fraud_rate", "fraud_shift", "modality_base"}, path)
    shift_node = _require(node, "fraud_shift", path)
    try:
        fraud_shift = {int(k): float(v) for k, v in shift_node.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"{path}.fraud_shift: expected a coord->offset mapping ({exc})")
    return PatternSpec(
        name=str(_require(node, "name", path)),
        fraud_rate=float(_require(node, "fraud_rate", path)),
        fraud_shift=fraud_shift,
        modality_base=tuple(float(x) for x in _require(node, "modality_base", path)),
    )


def _parse_stream(node: dict, path: str) -> StreamConfig:
    _check_keys(node, {"seed", "samples_per_cycle", "total_cycles", "patterns", "schedule"}, path)
    patterns = [
        _parse_pattern(p, f"{path}.patterns[{i}]")
        for i, p in enumerate(_require(node, "patterns", path))
    ]
    by_name = {p.name: p for p in patterns}
    if len(by_name) != len(patterns):
        raise ConfigError(f"{path}.patterns: duplicate pattern names")

    segments = []
    for i, seg in enumerate(_require(node, "schedule", path)):
        seg_path = f"{path}.schedule[{i}]"
        _check_keys(seg, {"start_cycle", "mixture"}, seg_path)
        mixture_node = _require(seg, "mixture", seg_path)
        mixture = []
        for pattern in patterns:  # pattern list order keeps mixtures deterministic
            if pattern.name in mixture_node:
                mixture.append((pattern, float(mixture_node[pattern.name])))
        unknown = set(mixture_node) - set(by_name)
        if unknown:
            raise ConfigError(f"{seg_path}.mixture: unknown patterns {sorted(unknown)}")
        segments.append(Segment(int(_require(seg, "start_cycle", seg_path)), tuple(mixture)))

    return StreamConfig(
        seed=int(_require(node, "seed", path)),
        samples_per_cycle=int(_require(node, "samples_per_cycle", path)),
        total_cycles=int(_require(node, "total_cycles", path)),
        schedule=DriftSchedule(tuple(segments)),
    )


def _parse_expert(node: dict, path: str) -> Expert:
    _check_keys(node, {"profile", "weights", "threshold"}, path)
    return Expert(
        profile=tuple(float(x) for x in _require(node, "profile", path)),
        weights=tuple(float(x) for x in _require(node, "weights", path)),
        threshold=float(_require(node, "threshold", path)),
    )


def _parse_agent(node: dict, path: str) -> AgentSpec:
    allowed = {
        "role", "skills", "experts", "learning_rate", "cost_per_sample",
        "handoff_reliability", "misbehaving", "service_time",
    }
    _check_keys(node, allowed, path)
    return AgentSpec(
        role=str(_require(node, "role", path)),
        skills=frozenset(str(s) for s in _require(node, "skills", path)),
        experts=tuple(
            _parse_expert(e, f"{path}.experts[{i}]")
            for i, e in enumerate(_require(node, "experts", path))
        ),
        learning_rate=float(node.get("learning_rate", 0.05)),
        cost_per_sample=float(node.get("cost_per_sample", 1.0)),
        handoff_reliability=float(node.get("handoff_reliability", 1.0)),
        misbehaving=bool(node.get("misbehaving", False)),
        service_time=int(node.get("service_time", 0)),
    )


def parse_config(root: dict, source: str = "<config>") -> RunConfig:
    if not isinstance(root, dict):
        raise ConfigError(f"{source}: top level must be an object")
    allowed = {"schema_version", "stream", "lifecycle", "reward", "roles", "roster", "pool", "output"}
    _check_keys(root, allowed, source)
    version = root.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"{source}: unsupported schema_version {version}")

    stream = _parse_stream(_require(root, "stream", source), f"{source}.stream")

    lc_node = root.get("lifecycle", {})
    _check_keys(
        lc_node,
        {"release_threshold", "reward_threshold", "sustain_window",
         "max_service_time", "keep_service_time_on_resign"},
        f"{source}.lifecycle",
    )
    lifecycle = LifecycleConfig(
        release_threshold=float(lc_node.get("release_threshold", 0.80)),
        reward_threshold=(
            None if lc_node.get("reward_threshold") is None
            else float(lc_node["reward_threshold"])
        ),
        sustain_window=int(lc_node.get("sustain_window", 3)),
        max_service_time=int(lc_node.get("max_service_time", 50)),
        keep_service_time_on_resign=bool(lc_node.get("keep_service_time_on_resign", True)),
    )

    rw_node = root.get("reward", {})
    _check_keys(
        rw_node,
        {"alpha", "beta", "gamma", "delta", "baseline_cost_per_sample", "fp_budget"},
        f"{source}.reward",
    )
    weights = RewardWeights(
        alpha=float(rw_node.get("alpha", 1.0)),
        beta=float(rw_node.get("beta", 0.25)),
        gamma=float(rw_node.get("gamma", 0.25)),
        delta=float(rw_node.get("delta", 0.5)),
    )
    reward_config = RewardConfig(
        baseline_cost_per_sample=float(rw_node.get("baseline_cost_per_sample", 1.0)),
        fp_budget=float(rw_node.get("fp_budget", 0.10)),
    )

    roles = []
    for i, role_node in enumerate(root.get("roles", [])):
        role_path = f"{source}.roles[{i}]"
        _check_keys(role_node, {"name", "required_skills"}, role_path)
        roles.append(
            RoleSpec(
                name=str(_require(role_node, "name", role_path)),
                required_skills=frozenset(
                    str(s) for s in _require(role_node, "required_skills", role_path)
                ),
            )
        )

    roster = tuple(
        _parse_agent(a, f"{source}.roster[{i}]") for i, a in enumerate(root.get("roster", []))
    )
    pool = tuple(
        _parse_agent(a, f"{source}.pool[{i}]") for i, a in enumerate(root.get("pool", []))
    )

    out_node = root.get("output", {})
    _check_keys(out_node, {"emit_detections", "snapshot_interval"}, f"{source}.output")

    return RunConfig(
        stream=stream,
        lifecycle=lifecycle,
        reward_weights=weights,
        reward_config=reward_config,
        roles=tuple(roles),
        roster=roster,
        pool=pool,
        emit_detections=bool(out_node.get("emit_detections", False)),
        snapshot_interval=int(out_node.get("snapshot_interval", 0)),
    )


def load_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    return parse_config(root, source=str(path))


# ---------------------------------------------------------------------------
# Serialization (snapshots embed the full config)
# ---------------------------------------------------------------------------

def config_to_dict(cfg: RunConfig) -> dict:
    def pattern_dict(p: PatternSpec) -> dict:
        return {
            "name": p.name,
            "fraud_rate": p.fraud_rate,
            "fraud_shift": {str(k): v for k, v in sorted(p.fraud_shift.items())},
            "modality_base": list(p.modality_base),
        }

    def agent_dict(a: AgentSpec) -> dict:
        return {
            "role": a.role,
            "skills": sorted(a.skills),
            "experts": [
                {"profile": list(e.profile), "weights": list(e.weights), "threshold": e.threshold}
                for e in a.experts
            ],
            "learning_rate": a.learning_rate,
            "cost_per_sample": a.cost_per_sample,
            "handoff_reliability": a.handoff_reliability,
            "misbehaving": a.misbehaving,
            "service_time": a.service_time,
        }

    patterns: list[PatternSpec] = []
    seen = set()
    for seg in cfg.stream.schedule.segments:
        for pattern, _ in seg.mixture:
            if pattern.name not in seen:
                seen.add(pattern.name)
                patterns.append(pattern)

    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "stream": {
            "seed": cfg.stream.seed,
            "samples_per_cycle": cfg.stream.samples_per_cycle,
            "total_cycles": cfg.stream.total_cycles,
            "patterns": [pattern_dict(p) for p in patterns],
            "schedule": [
                {
                    "start_cycle": seg.start_cycle,
                    "mixture": {p.name: w for p, w in seg.mixture},
                }
                for seg in cfg.stream.schedule.segments
            ],
        },
        "lifecycle": {
            "release_threshold": cfg.lifecycle.release_threshold,
            "reward_threshold": cfg.lifecycle.reward_threshold,
            "sustain_window": cfg.lifecycle.sustain_window,
            "max_service_time": cfg.lifecycle.max_service_time,
            "keep_service_time_on_resign": cfg.lifecycle.keep_service_time_on_resign,
        },
        "reward": {
            "alpha": cfg.reward_weights.alpha,
            "beta": cfg.reward_weights.beta,
            "gamma": cfg.reward_weights.gamma,
            "delta": cfg.reward_weights.delta,
            "baseline_cost_per_sample": cfg.reward_config.baseline_cost_per_sample,
            "fp_budget": cfg.reward_config.fp_budget,
        },
        "roles": [
            {"name": r.name, "required_skills": sorted(r.required_skills)} for r in cfg.roles
        ],
        "roster": [agent_dict(a) for a in cfg.roster],
        "pool": [agent_dict(a) for a in cfg.pool],
        "output": {
            "emit_detections": cfg.emit_detections,
            "snapshot_interval": cfg.snapshot_interval,
        },
    }


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def section_4_4_preset(
    seed: int = 42,
    scenario: ScenarioSpec = DEFAULT_SCENARIO,
    total_cycles: int = 30,
    drift_cycle: int = 10,
    samples_per_cycle: int = 1000,
) -> RunConfig:
    """Drift scenario: an incumbent tuned for pattern A degrades when
    pattern B arrives mid-run, and a pattern-B candidate waits in the
    pool. Accuracies are constructed, not learned; see simulator docs.
    """
    pattern_a, pattern_b = scenario_patterns(scenario)
    schedule = DriftSchedule(
        (
            Segment(0, ((pattern_a, 1.0),)),
            Segment(
                drift_cycle,
                (
                    (pattern_a, 1.0 - scenario.post_drift_b_weight),
                    (pattern_b, scenario.post_drift_b_weight),
                ),
            ),
        )
    )
    incumbent = AgentSpec(
        role="FraudDetection",
        skills=frozenset({"fraud", "text", "numeric", "behavior"}),
        experts=incumbent_experts(scenario),
        handoff_reliability=0.98,
    )
    candidate = AgentSpec(
        role="FraudDetection",
        skills=frozenset({"fraud", "text", "numeric", "behavior", "pattern-B"}),
        experts=candidate_experts(scenario),
        handoff_reliability=0.98,
    )
    return RunConfig(
        stream=StreamConfig(
            seed=seed,
            samples_per_cycle=samples_per_cycle,
            total_cycles=total_cycles,
            schedule=schedule,
        ),
        lifecycle=LifecycleConfig(),
        roles=(RoleSpec(name="FraudDetection", required_skills=frozenset({"fraud", "pattern-B"})),),
        roster=(incumbent,),
        pool=(candidate,),
    )


PRESETS = {
    "section-4.4": section_4_4_preset,
}


def preset_config(name: str, seed: int | None = None) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}'; available: {sorted(PRESETS)}")
    return PRESETS[name]() if seed is None else PRESETS[name](seed=seed)
