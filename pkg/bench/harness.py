"""
Rule-ordering measurements.

Two costs are recorded per alert: wall-clock latency from pipeline entry
to alert emission, and the number of header and option checks the engine
made before the alert. The second is exact and identical across runs.
"""
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union
import logging
import time

import numpy as np

from detectors import DetectorConfig, DetectorSuite
from pipeline import CaptureRecord, Pipeline, read_capture
from rules import Alert, CompiledRuleSet

from .constants import LATENCY_PERCENTILE, Ordering, Winner
from .exceptions import RuleSetMismatch

logger = logging.getLogger(__name__)

RuleId = Tuple[int, int]
Capture = Union[str, Path, Iterable[CaptureRecord]]


@dataclass(frozen=True)
class LatencySample:
    gid: int
    sid: int
    position: int
    capture_ts: int
    entered_ns: int
    emitted_ns: int
    options_evaluated: int
    repetition: int = 0

    @property
    def rule_id(self) -> RuleId:
        return (self.gid, self.sid)

    @property
    def detection_time_us(self) -> float:
        return (self.emitted_ns - self.entered_ns) / 1000


@dataclass(frozen=True)
class RuleStats:
    gid: int
    sid: int
    ordering: str
    position: int
    samples: int = 0
    mean_us: Optional[float] = None
    median_us: Optional[float] = None
    p95_us: Optional[float] = None
    std_us: Optional[float] = None
    mean_options: Optional[float] = None


@dataclass(frozen=True)
class Comparison:
    gid: int
    sid: int
    position_a: int
    position_b: int
    fewer_options: str
    lower_latency: str
    cost_violation: bool = False
    latency_inverted: bool = False
    diagnostics: str = ""


@dataclass
class SequenceReport:
    repetitions: int
    stats: Dict[str, Dict[RuleId, RuleStats]] = field(default_factory=dict)
    comparisons: List[Comparison] = field(default_factory=list)

    @property
    def cost_violations(self) -> List[Comparison]:
        return [c for c in self.comparisons if c.cost_violation]

    @property
    def latency_inversions(self) -> List[Comparison]:
        return [c for c in self.comparisons if c.latency_inverted]


def _records(capture: Capture) -> List[CaptureRecord]:
    if isinstance(capture, (str, Path)):
        return list(read_capture(capture))
    return list(capture)


def measure_detection(
    ruleset: CompiledRuleSet,
    capture: Capture,
    repetitions: int = 1,
    detectors: Optional[DetectorConfig] = None,
    timer: Callable[[], int] = time.perf_counter_ns,
) -> List[LatencySample]:
    """
    Replay a capture ``repetitions`` times, each through a fresh pipeline,
    and sample every alert produced by a rule. Detector alerts not bound to
    a rule have no position and are not sampled.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    records = _records(capture)
    samples: List[LatencySample] = []

    for repetition in range(repetitions):
        entered = 0

        def on_alert(alert: Alert) -> None:
            emitted = timer()
            if alert.position is None:
                return
            samples.append(LatencySample(
                gid=alert.gid,
                sid=alert.sid,
                position=alert.position,
                capture_ts=alert.timestamp,
                entered_ns=entered,
                emitted_ns=emitted,
                options_evaluated=alert.options_evaluated,
                repetition=repetition,
            ))

        pipeline = Pipeline(ruleset, detectors=DetectorSuite(detectors), on_alert=on_alert)
        for record in records:
            entered = timer()
            pipeline.process(record)

    logger.info(f"Measured {len(samples)} samples over {repetitions} repetitions of {len(records)} records")
    return samples


def mean_packet_cost(ruleset: CompiledRuleSet, capture: Capture) -> float:
    """Mean checks per decoded packet, matched or not."""
    pipeline = Pipeline(ruleset)
    pipeline.run(_records(capture), keep_output=False)
    counters = pipeline.counters
    evaluated = counters.packets_evaluated
    return counters.options_evaluated / evaluated if evaluated else 0.0


def summarise(ruleset: CompiledRuleSet, samples: Iterable[LatencySample], ordering: str) -> Dict[RuleId, RuleStats]:
    """Per-rule statistics; rules without samples are listed with empty figures."""
    grouped: Dict[RuleId, List[LatencySample]] = {}
    for sample in samples:
        grouped.setdefault(sample.rule_id, []).append(sample)

    stats: Dict[RuleId, RuleStats] = {}
    for rule in ruleset.rules:
        found = grouped.get(rule.rule_id, [])
        if not found:
            stats[rule.rule_id] = RuleStats(rule.gid, rule.sid, ordering, rule.position)
            continue
        latency = np.array([s.detection_time_us for s in found], dtype=float)
        options = np.array([s.options_evaluated for s in found], dtype=float)
        stats[rule.rule_id] = RuleStats(
            gid=rule.gid,
            sid=rule.sid,
            ordering=ordering,
            position=rule.position,
            samples=len(found),
            mean_us=float(latency.mean()),
            median_us=float(np.median(latency)),
            p95_us=float(np.percentile(latency, LATENCY_PERCENTILE)),
            std_us=float(latency.std()),
            mean_options=float(options.mean()),
        )
    return stats


def _winner(a: Optional[float], b: Optional[float]) -> str:
    if a is None or b is None or a == b:
        return Winner.TIE
    return Ordering.SEQ_A if a < b else Ordering.SEQ_B


def _earlier_is_costlier(pos_a: int, pos_b: int, a: Optional[float], b: Optional[float]) -> bool:
    if a is None or b is None or pos_a == pos_b:
        return False
    return a > b if pos_a < pos_b else b > a


def _compare(a: RuleStats, b: RuleStats) -> Comparison:
    cost_violation = _earlier_is_costlier(a.position, b.position, a.mean_options, b.mean_options)
    inverted = _earlier_is_costlier(a.position, b.position, a.mean_us, b.mean_us)
    diagnostics = ""
    if cost_violation:
        logger.warning(
            f"Rule {a.gid}:{a.sid} evaluates more options at the earlier position "
            f"({a.mean_options} at {a.position} vs {b.mean_options} at {b.position})"
        )
    if inverted:
        diagnostics = (
            f"mean {a.mean_us:.2f}us sd {a.std_us:.2f} n={a.samples} at position {a.position}; "
            f"mean {b.mean_us:.2f}us sd {b.std_us:.2f} n={b.samples} at position {b.position}"
        )
        logger.warning(f"Latency inversion for rule {a.gid}:{a.sid}: {diagnostics}")
    return Comparison(
        gid=a.gid,
        sid=a.sid,
        position_a=a.position,
        position_b=b.position,
        fewer_options=_winner(a.mean_options, b.mean_options),
        lower_latency=_winner(a.mean_us, b.mean_us),
        cost_violation=cost_violation,
        latency_inverted=inverted,
        diagnostics=diagnostics,
    )


def compare_sequences(
    seq_a: CompiledRuleSet,
    seq_b: CompiledRuleSet,
    capture: Capture,
    repetitions: int = 1,
    detectors: Optional[DetectorConfig] = None,
) -> SequenceReport:
    """
    Measure the same capture under two orderings of the same rules.

    Raises:
        RuleSetMismatch: the orderings do not hold the same rules
    """
    if Counter(r.semantic_key() for r in seq_a.rules) != Counter(r.semantic_key() for r in seq_b.rules):
        raise RuleSetMismatch()
    records = _records(capture)
    report = SequenceReport(repetitions=repetitions)
    for label, ruleset in ((Ordering.SEQ_A, seq_a), (Ordering.SEQ_B, seq_b)):
        samples = measure_detection(ruleset, records, repetitions, detectors=detectors)
        report.stats[label] = summarise(ruleset, samples, label)

    stats_b = report.stats[Ordering.SEQ_B]
    for rule_id, stats_a in report.stats[Ordering.SEQ_A].items():
        report.comparisons.append(_compare(stats_a, stats_b[rule_id]))
    return report
