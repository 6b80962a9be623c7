"""
Per-packet processing: decode, flow update, detectors, ordered rules.

In ``ips`` mode packets matched by a drop rule are withheld from the
output; every other record, including undecodable ones, is forwarded
unchanged.
"""
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Tuple, Union
import logging
import time

from detectors import DetectorSuite
from rules import Alert, CompiledRuleSet, RuleSetHolder, ThresholdState, evaluate

from .capture import CaptureRecord, read_capture
from .decoder import Skip, decode_packet
from .flows import FlowTable

logger = logging.getLogger(__name__)

USEC_PER_SEC = 1_000_000


class Mode:
    IDS = "ids"
    IPS = "ips"

    ALL = (IDS, IPS)


@dataclass
class PipelineCounters:
    packets_in: int = 0
    packets_out: int = 0
    packets_dropped: int = 0
    packets_skipped: int = 0
    packets_evaluated: int = 0
    dnp3_packets: int = 0
    alerts: int = 0
    options_evaluated: int = 0
    skip_reasons: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {
            "packets_in": self.packets_in,
            "packets_out": self.packets_out,
            "packets_dropped": self.packets_dropped,
            "packets_skipped": self.packets_skipped,
            "packets_evaluated": self.packets_evaluated,
            "dnp3_packets": self.dnp3_packets,
            "alerts": self.alerts,
            "options_evaluated": self.options_evaluated,
            "skip_reasons": dict(self.skip_reasons),
        }


@dataclass
class PipelineResult:
    alerts: List[Alert]
    output: List[CaptureRecord]
    counters: PipelineCounters


def wall_clock() -> int:
    return time.time_ns() // 1000


class Pipeline:
    """
    One single-writer pipeline. Owns its flow table, threshold state and
    detector state. The rule set is read from the holder once per packet,
    so a swap never lands mid-packet.
    """

    def __init__(
        self,
        ruleset: Union[CompiledRuleSet, RuleSetHolder],
        detectors: Optional[DetectorSuite] = None,
        mode: str = Mode.IDS,
        seq_window: int = 65535,
        idle_timeout: float = 300.0,
        evaluate_all: bool = False,
        clock: Optional[Callable[[], int]] = None,
        on_alert: Optional[Callable[[Alert], None]] = None,
    ):
        if mode not in Mode.ALL:
            raise ValueError(f"mode must be one of {Mode.ALL}, got '{mode}'")
        self.holder = ruleset if isinstance(ruleset, RuleSetHolder) else RuleSetHolder(ruleset)
        self.detectors = detectors if detectors is not None else DetectorSuite()
        self.mode = mode
        self.flows = FlowTable(seq_window=seq_window, idle_timeout=idle_timeout)
        self.thresholds = ThresholdState()
        self.evaluate_all = evaluate_all
        self.clock = clock
        self.on_alert = on_alert
        self.counters = PipelineCounters()
        self._last_purge = 0

    def _maybe_purge(self, now: int, ruleset: CompiledRuleSet) -> None:
        if now - self._last_purge >= USEC_PER_SEC:
            self._last_purge = now
            purged = self.thresholds.purge(now, ruleset.threshold_horizon)
            if purged:
                logger.debug(f"Purged {purged} expired threshold windows")

    def process(self, record: CaptureRecord) -> Tuple[bool, List[Alert]]:
        """Handle one record. Returns (forwarded, alerts)."""
        self.counters.packets_in += 1
        decoded = decode_packet(record)
        if isinstance(decoded, Skip):
            self.counters.packets_skipped += 1
            self.counters.skip_reasons[decoded.reason] += 1
            self.counters.packets_out += 1
            return True, []

        pkt = decoded
        if pkt.dnp3_error is not None:
            # no reassembly across segments; complete leading frames are still inspected
            self.counters.packets_skipped += 1
            self.counters.skip_reasons[pkt.dnp3_error] += 1
        if pkt.dnp3_frames:
            self.counters.dnp3_packets += 1
        now = self.clock() if self.clock is not None else pkt.timestamp
        ruleset = self.holder.current
        self._maybe_purge(now, ruleset)
        self.counters.packets_evaluated += 1

        verdict = self.flows.update(pkt)
        detections = self.detectors.run(pkt, verdict, now)
        evaluation = evaluate(
            ruleset,
            pkt,
            verdict,
            self.thresholds,
            clock=lambda: now,
            detections=detections,
            evaluate_all=self.evaluate_all,
        )
        self.counters.options_evaluated += evaluation.options_evaluated

        for alert in evaluation.alerts:
            self.counters.alerts += 1
            logger.info(f"Alert {alert.gid}:{alert.sid} '{alert.msg}' {alert.src_ip} -> {alert.dst_ip}")
            if self.on_alert is not None:
                self.on_alert(alert)

        if self.mode == Mode.IPS and evaluation.drop:
            self.counters.packets_dropped += 1
            return False, evaluation.alerts
        self.counters.packets_out += 1
        return True, evaluation.alerts

    def run(self, records: Iterable[CaptureRecord], keep_output: bool = True) -> PipelineResult:
        alerts: List[Alert] = []
        output: List[CaptureRecord] = []
        for record in records:
            forwarded, produced = self.process(record)
            alerts.extend(produced)
            if forwarded and keep_output:
                output.append(record)
        logger.info(f"Pipeline finished: {self.counters.as_dict()}")
        return PipelineResult(alerts=alerts, output=output, counters=self.counters)


def run_pipeline(
    source: Union[str, Path, Iterable[CaptureRecord]],
    ruleset: Union[CompiledRuleSet, RuleSetHolder],
    detectors: Optional[DetectorSuite] = None,
    mode: str = Mode.IDS,
    **options,
) -> PipelineResult:
    """
    Run a capture file (or any record iterable) through a fresh pipeline.

    Raises:
        CaptureError: the source could not be read
    """
    records = read_capture(source) if isinstance(source, (str, Path)) else source
    pipeline = Pipeline(ruleset, detectors=detectors, mode=mode, **options)
    return pipeline.run(records)
