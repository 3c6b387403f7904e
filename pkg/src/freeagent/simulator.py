"""Seeded synthetic transaction stream with scheduled concept drift, plus
constructors for the demo scenario's incumbent and candidate agents.

Stream determinism contract
---------------------------
Every sample is generated from its own counter-based substream: a numpy
Philox4x64 bit generator whose 128-bit key is
``blake2b("sample|<seed>|<cycle>|<seq>", digest_size=16)`` with a zero
counter. Per sample the draw order is fixed: one uniform for the pattern
mixture, one uniform for the fraud label, FEATURE_DIM standard normals
for feature noise, MODALITY_DIM uniforms for modality jitter. Any cycle
(and any single sample) is therefore reproducible without generating
anything before it. Bit-exactness holds for a pinned numpy version; the
pin lives in pyproject.toml.

Scenario construction
---------------------
The bundled scenario's accuracy numbers are produced BY DESIGN, not
learned: fraud samples shift designated feature coordinates by offsets
computed in closed form from the Gaussian error function, so a linear
expert with a known threshold hits a designed accuracy. The scenario
exists to exercise the roster machinery, not to make a learning claim.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .domain import (
    FEATURE_DIM,
    MODALITY_DIM,
    AccessTier,
    Agent,
    AgentStatus,
    ConfigError,
    DataSample,
)
from .moe import Expert, MoEState, expert_score, gate, uniform_moe

_NORMAL = NormalDist()

# Relative jitter applied to non-zero modality base entries. Zero entries
# stay exactly zero so experts for unrelated modalities never compete.
_MODALITY_JITTER = 0.1

# Seed for the construction-time calibration measurement; independent of
# any run seed so the self-check is stable.
_CALIBRATION_SEED = 0xCA11B


def derive_key(*parts: object) -> np.ndarray:
    """128-bit Philox key from a domain-separated part list."""
    payload = "|".join(str(p) for p in parts).encode()
    digest = hashlib.blake2b(payload, digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64)


class KeyedRng:
    """Reusable Philox generator reset to a fresh key per use.

    Resetting the bit-generator state is equivalent to constructing
    ``Generator(Philox(key=...))`` but avoids per-sample object churn.
    """

    def __init__(self) -> None:
        self._bitgen = np.random.Philox(key=0)
        self.generator = np.random.Generator(self._bitgen)

    def reset(self, *parts: object) -> np.random.Generator:
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.zeros(4, dtype=np.uint64), "key": derive_key(*parts)},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self.generator


@dataclass(frozen=True)
class PatternSpec:
    """One generator pattern: which coordinates fraud shifts, and how far.

    Legitimate samples are standard normal on every feature coordinate;
    fraud samples add ``fraud_shift[coord]`` on the designated ones.
    """

    name: str
    fraud_rate: float
    fraud_shift: dict[int, float]
    modality_base: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.fraud_rate < 1.0:
            raise ConfigError(f"pattern {self.name}: fraud_rate must be in (0, 1)")
        if len(self.modality_base) != MODALITY_DIM:
            raise ConfigError(f"pattern {self.name}: modality_base must have {MODALITY_DIM} entries")
        if any(m < 0 for m in self.modality_base) or sum(self.modality_base) <= 0:
            raise ConfigError(f"pattern {self.name}: modality_base must be non-negative, sum > 0")
        for coord in self.fraud_shift:
            if not 0 <= coord < FEATURE_DIM:
                raise ConfigError(f"pattern {self.name}: shift coordinate {coord} out of range")


@dataclass(frozen=True)
class Segment:
    start_cycle: int
    mixture: tuple[tuple[PatternSpec, float], ...]


@dataclass(frozen=True)
class DriftSchedule:
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ConfigError("drift schedule needs at least one segment")
        if self.segments[0].start_cycle != 0:
            raise ConfigError("first segment must start at cycle 0")
        starts = [seg.start_cycle for seg in self.segments]
        if starts != sorted(set(starts)):
            raise ConfigError("segment starts must be strictly increasing")
        for seg in self.segments:
            weights = [w for _, w in seg.mixture]
            if not weights or any(w <= 0 for w in weights):
                raise ConfigError("mixture weights must be positive")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise ConfigError("mixture weights must sum to 1")

    def segment_for(self, cycle: int) -> Segment:
        active = self.segments[0]
        for seg in self.segments:
            if seg.start_cycle <= cycle:
                active = seg
            else:
                break
        return active


@dataclass(frozen=True)
class StreamConfig:
    seed: int
    samples_per_cycle: int
    total_cycles: int
    schedule: DriftSchedule

    def __post_init__(self) -> None:
        if self.samples_per_cycle < 1:
            raise ConfigError("samples_per_cycle must be >= 1")
        if self.total_cycles < 1:
            raise ConfigError("total_cycles must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")


def generate_sample(
    cfg: StreamConfig, cycle: int, seq: int, rng: KeyedRng | None = None
) -> DataSample:
    """Generate the sample at (cycle, seq) independently of all others."""
    gen = (rng or KeyedRng()).reset("sample", cfg.seed, cycle, seq)
    segment = cfg.schedule.segment_for(cycle)

    u_pattern = gen.random()
    pattern = segment.mixture[-1][0]
    acc = 0.0
    for spec, weight in segment.mixture:
        acc += weight
        if u_pattern < acc:
            pattern = spec
            break

    label = bool(gen.random() < pattern.fraud_rate)

    noise = gen.standard_normal(FEATURE_DIM)
    features = list(noise)
    if label:
        for coord, shift in pattern.fraud_shift.items():
            features[coord] += shift

    jitter = gen.random(MODALITY_DIM)
    modality = [
        base * (1.0 + _MODALITY_JITTER * (2.0 * u - 1.0)) if base > 0 else 0.0
        for base, u in zip(pattern.modality_base, jitter)
    ]
    total = sum(modality)
    modality = [m / total for m in modality]

    return DataSample(
        seq=cycle * cfg.samples_per_cycle + seq,
        features=tuple(features),
        modality=tuple(modality),
        label=label,
        pattern=pattern.name,
    )


def generate_cycle(cfg: StreamConfig, cycle: int) -> list[DataSample]:
    """All samples of one cycle, in seq order."""
    if not 0 <= cycle < cfg.total_cycles:
        raise ConfigError(f"cycle {cycle} outside [0, {cfg.total_cycles})")
    rng = KeyedRng()
    return [generate_sample(cfg, cycle, seq, rng) for seq in range(cfg.samples_per_cycle)]


# ---------------------------------------------------------------------------
# Demo scenario: incumbent tuned for pattern A, candidate tuned for the
# post-drift A/B mixture with extra headroom on the sensitive suffix.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    """Accuracy targets and acceptance bands for the bundled scenario.

    Derivation sketch (all via the normal quantile z):
      * a single-coordinate expert with threshold z(p) on a fraud shift
        of 2*z(p) is correct on each class with probability p;
      * the incumbent's behavior expert keeps its pattern-A threshold, so
        the visible pattern-B shift is set for the incumbent's designed
        mixture accuracy;
      * the candidate's strongest expert also weights the first sensitive
        coordinate; its threshold is placed for the full-tier class
        accuracies and the visible shift for the restricted-tier target.
    """

    incumbent_a_accuracy: float = 0.95
    incumbent_mixture_accuracy: float = 0.75
    candidate_shadow_mixture_accuracy: float = 0.88
    candidate_full_legit_accuracy: float = 0.95
    candidate_full_fraud_accuracy: float = 0.91
    fraud_rate: float = 0.5
    post_drift_b_weight: float = 0.5
    sensitive_weight: float = 0.5
    incumbent_a_band: tuple[float, float] = (0.93, 0.97)
    incumbent_mixture_band: tuple[float, float] = (0.72, 0.78)
    candidate_shadow_band: tuple[float, float] = (0.85, 0.91)
    candidate_full_min: float = 0.90

    def offsets(self) -> dict[str, float]:
        """Solve the feature shifts and thresholds in closed form."""
        z = _NORMAL.inv_cdf
        phi = _NORMAL.cdf
        theta = z(self.incumbent_a_accuracy)
        shift_a = 2.0 * theta

        mix_b = self.post_drift_b_weight
        acc_b_incumbent = (
            self.incumbent_mixture_accuracy - (1.0 - mix_b) * self.incumbent_a_accuracy
        ) / mix_b
        fraud_hit = 2.0 * acc_b_incumbent - self.incumbent_a_accuracy
        if not 0.0 < fraud_hit < 1.0:
            raise ConfigError("incumbent mixture target infeasible for the given A accuracy")
        shift_b_visible = theta + z(fraud_hit)

        sigma_full = (2.0 + self.sensitive_weight**2) ** 0.5
        threshold_candidate = sigma_full * z(self.candidate_full_legit_accuracy)
        mean_full = threshold_candidate + sigma_full * z(self.candidate_full_fraud_accuracy)

        acc_b_shadow = (
            self.candidate_shadow_mixture_accuracy - (1.0 - mix_b) * self.incumbent_a_accuracy
        ) / mix_b
        legit_restricted = phi(threshold_candidate / 2.0**0.5)
        fraud_restricted = 2.0 * acc_b_shadow - legit_restricted
        if not 0.0 < fraud_restricted < 1.0:
            raise ConfigError("candidate shadow target infeasible for the given thresholds")
        mean_restricted = threshold_candidate + 2.0**0.5 * z(fraud_restricted)

        shift_b_numeric = mean_restricted - shift_b_visible
        shift_b_sensitive = (mean_full - mean_restricted) / self.sensitive_weight
        if shift_b_numeric <= 0 or shift_b_sensitive <= 0:
            raise ConfigError("scenario targets produce non-positive feature shifts")

        return {
            "theta": theta,
            "shift_a": shift_a,
            "shift_b_visible": shift_b_visible,
            "shift_b_numeric": shift_b_numeric,
            "shift_b_sensitive": shift_b_sensitive,
            "threshold_candidate": threshold_candidate,
        }


DEFAULT_SCENARIO = ScenarioSpec()


def scenario_patterns(spec: ScenarioSpec = DEFAULT_SCENARIO) -> tuple[PatternSpec, PatternSpec]:
    ofs = spec.offsets()
    pattern_a = PatternSpec(
        name="A",
        fraud_rate=spec.fraud_rate,
        fraud_shift={0: ofs["shift_a"]},
        modality_base=(0.7, 0.3, 0.0),
    )
    pattern_b = PatternSpec(
        name="B",
        fraud_rate=spec.fraud_rate,
        fraud_shift={
            1: ofs["shift_b_numeric"],
            2: ofs["shift_b_visible"],
            3: ofs["shift_b_sensitive"],
        },
        modality_base=(0.0, 0.3, 0.7),
    )
    return pattern_a, pattern_b


def _unit_weight(coord: int) -> tuple[float, ...]:
    w = [0.0] * FEATURE_DIM
    w[coord] = 1.0
    return tuple(w)


def incumbent_experts(spec: ScenarioSpec = DEFAULT_SCENARIO) -> tuple[Expert, ...]:
    theta = spec.offsets()["theta"]
    return (
        Expert(profile=(1.0, 0.0, 0.0), weights=_unit_weight(0), threshold=theta),
        Expert(profile=(0.0, 1.0, 0.0), weights=_unit_weight(1), threshold=theta),
        Expert(profile=(0.0, 0.0, 1.0), weights=_unit_weight(2), threshold=theta),
    )


def candidate_experts(spec: ScenarioSpec = DEFAULT_SCENARIO) -> tuple[Expert, ...]:
    ofs = spec.offsets()
    pattern_b_weights = [0.0] * FEATURE_DIM
    pattern_b_weights[1] = 1.0
    pattern_b_weights[2] = 1.0
    pattern_b_weights[3] = spec.sensitive_weight
    return (
        Expert(profile=(1.0, 0.0, 0.0), weights=_unit_weight(0), threshold=ofs["theta"]),
        Expert(profile=(0.0, 1.0, 0.0), weights=_unit_weight(1), threshold=ofs["theta"]),
        Expert(
            profile=(0.0, 0.0, 1.0),
            weights=tuple(pattern_b_weights),
            threshold=ofs["threshold_candidate"],
        ),
    )


def measure_accuracy(
    moe: MoEState,
    stream: StreamConfig,
    tier: AccessTier,
    cycles: range | None = None,
) -> float:
    """Fraction of correct verdicts with a frozen gate over a stream.

    The sample is redacted to the given tier before scoring, exactly as
    the live pipeline would do.
    """
    from .pipeline import redact

    rng = KeyedRng()
    correct = 0
    total = 0
    for cycle in cycles or range(stream.total_cycles):
        for seq in range(stream.samples_per_cycle):
            sample = generate_sample(stream, cycle, seq, rng)
            red = redact(sample, tier)
            idx = gate(moe, red.modality)
            _, verdict = expert_score(moe.experts[idx], red.features)
            correct += int(verdict == sample.label)
            total += 1
    return correct / total


def make_scenario_agents(
    spec: ScenarioSpec = DEFAULT_SCENARIO,
    self_check: bool = True,
    check_samples: int = 10_000,
) -> tuple[Agent, Agent]:
    """Build the incumbent (Active, id 0) and candidate (pool, id 1).

    With ``self_check`` the designed accuracies are measured on fresh
    calibration streams and must land inside the spec bands, otherwise
    the construction fails.
    """
    incumbent = Agent(
        id=0,
        role="FraudDetection",
        skills=frozenset({"fraud", "text", "numeric", "behavior"}),
        status=AgentStatus.ACTIVE,
        access_tier=AccessTier.FULL,
        moe=uniform_moe(incumbent_experts(spec)),
        cost_per_sample=1.0,
        handoff_reliability=0.98,
    )
    candidate = Agent(
        id=1,
        role="FraudDetection",
        skills=frozenset({"fraud", "text", "numeric", "behavior", "pattern-B"}),
        status=AgentStatus.RELEASED,
        access_tier=AccessTier.SANDBOX,
        moe=uniform_moe(candidate_experts(spec)),
        cost_per_sample=1.0,
        handoff_reliability=0.98,
    )

    if self_check:
        pattern_a, pattern_b = scenario_patterns(spec)
        pure_a = StreamConfig(
            seed=_CALIBRATION_SEED,
            samples_per_cycle=check_samples,
            total_cycles=1,
            schedule=DriftSchedule((Segment(0, ((pattern_a, 1.0),)),)),
        )
        mixture = StreamConfig(
            seed=_CALIBRATION_SEED + 1,
            samples_per_cycle=check_samples,
            total_cycles=1,
            schedule=DriftSchedule(
                (
                    Segment(
                        0,
                        (
                            (pattern_a, 1.0 - spec.post_drift_b_weight),
                            (pattern_b, spec.post_drift_b_weight),
                        ),
                    ),
                )
            ),
        )
        checks = [
            ("incumbent on pattern A", measure_accuracy(incumbent.moe, pure_a, AccessTier.FULL),
             spec.incumbent_a_band),
            ("incumbent on mixture", measure_accuracy(incumbent.moe, mixture, AccessTier.FULL),
             spec.incumbent_mixture_band),
            ("candidate shadow on mixture",
             measure_accuracy(candidate.moe, mixture, AccessTier.RESTRICTED),
             spec.candidate_shadow_band),
            ("candidate full on mixture",
             measure_accuracy(candidate.moe, mixture, AccessTier.FULL),
             (spec.candidate_full_min, 1.0)),
        ]
        for label, measured, (lo, hi) in checks:
            if not lo <= measured <= hi:
                raise ConfigError(
                    f"calibration failed: {label} = {measured:.4f} outside [{lo}, {hi}]"
                )

    return incumbent, candidate
