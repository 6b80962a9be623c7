"""
Rule emission from a learned baseline.

Rules come out grouped by pattern kind in priority order (critical
commands, flow direction, payload/port, rate) and carry their kind in a
``pattern-kind`` metadata pair so later merges can place them.
"""
from dataclasses import dataclass
from ipaddress import ip_address, ip_network
from typing import AbstractSet, Dict, List, Optional, Sequence, Tuple
import logging
import time

from dnp3 import describe_function
from dnp3.constants import DEFAULT_CRITICAL_FUNCTIONS
from detectors.constants import DEFAULT_SELECT_TIMEOUT
from detectors.suite import DetectorConfig
from rules import Rule, parse_rule, render_rule

from .baseline import BaselineProfile
from .constants import (
    CRITICALITY,
    DEFAULT_FLOOD_COUNT,
    DEFAULT_K_SIGMA,
    DEFAULT_WINDOW,
    DESTINATION_OFFSET,
    FIRST_GENERATED_SID,
    PATTERN_METADATA_KEY,
    PatternKind,
    RuleVariable,
)
from .patterns import TrafficPattern

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorConfig:
    k_sigma: float = DEFAULT_K_SIGMA
    window: int = DEFAULT_WINDOW
    select_timeout: float = DEFAULT_SELECT_TIMEOUT
    critical_functions: AbstractSet[int] = DEFAULT_CRITICAL_FUNCTIONS
    first_sid: int = FIRST_GENERATED_SID
    flood_count: int = DEFAULT_FLOOD_COUNT

    def detector_config(self, profile: BaselineProfile) -> DetectorConfig:
        """Detector settings that go with rules generated from ``profile``."""
        return DetectorConfig(
            authorized_masters=tuple(sorted(profile.masters, key=ip_address)),
            select_timeout=self.select_timeout,
            critical_functions=frozenset(self.critical_functions),
        )


@dataclass(frozen=True)
class Provenance:
    capture_id: str
    generated_at: int


@dataclass(frozen=True)
class GeneratedRule:
    rule: Rule
    pattern: TrafficPattern
    provenance: Provenance

    @property
    def kind(self) -> int:
        return self.pattern.kind

    @property
    def text(self) -> str:
        return render_rule(self.rule)


def criticality(code: int) -> Tuple[int, int]:
    rank = CRITICALITY.index(code) if code in CRITICALITY else len(CRITICALITY)
    return rank, code


def generated_variables(profile: BaselineProfile) -> Dict[str, tuple]:
    def networks(addresses):
        return tuple(ip_network(address) for address in sorted(addresses, key=ip_address))

    return {
        RuleVariable.MASTERS: networks(profile.masters),
        RuleVariable.OUTSTATIONS: networks(profile.outstations),
        RuleVariable.KNOWN_HOSTS: networks(profile.endpoints),
    }


def _ports(ports: Sequence[int]) -> str:
    ordered = sorted(ports)
    if len(ordered) == 1:
        return str(ordered[0])
    return "[" + ",".join(str(port) for port in ordered) + "]"


def _hex(octets: bytes) -> str:
    return 'content:"|' + " ".join(f"{octet:02X}" for octet in octets) + '|"'


class _Emitter:
    def __init__(self, config: GeneratorConfig, provenance: Provenance):
        self.config = config
        self.provenance = provenance
        self.next_sid = config.first_sid
        self.rules: List[GeneratedRule] = []

    def emit(self, header: str, options: List[str], msg: str, pattern: TrafficPattern) -> None:
        escaped = msg.replace('"', "'")
        body = options + [
            f'msg:"{escaped}"',
            f"metadata: {PATTERN_METADATA_KEY} {pattern.kind}",
            f"sid:{self.next_sid}",
            "rev:1",
        ]
        rule = parse_rule(f"{header} ({'; '.join(body)};)")
        self.rules.append(GeneratedRule(rule=rule, pattern=pattern, provenance=self.provenance))
        self.next_sid += 1


def generate_ruleset(
    profile: BaselineProfile,
    config: Optional[GeneratorConfig] = None,
    generated_at: Optional[int] = None,
) -> List[GeneratedRule]:
    """
    Build the ordered rule list for a baseline.

    Rule text depends only on the profile and config. ``generated_at``
    (microseconds) only feeds provenance and defaults to now.
    """
    config = config or GeneratorConfig()
    stamp = generated_at if generated_at is not None else time.time_ns() // 1000
    emitter = _Emitter(config, Provenance(profile.capture_id, stamp))
    ports = _ports(profile.ports)
    masters, outstations, known = (f"${name}" for name in (
        RuleVariable.MASTERS, RuleVariable.OUTSTATIONS, RuleVariable.KNOWN_HOSTS,
    ))

    for code in sorted(config.critical_functions, key=criticality):
        emitter.emit(
            f"alert tcp !{masters} any -> {outstations} {ports}",
            [_hex(bytes([code])), "offset:12", "depth:1"],
            f"DNP3 {describe_function(code)} from unknown source",
            TrafficPattern(PatternKind.CRITICAL_COMMAND, function_code=code),
        )

    emitter.emit(
        f"alert tcp !{masters} any -> {outstations} {ports}",
        ["flow: not_established"],
        "Unestablished flow toward outstation",
        TrafficPattern(PatternKind.FLOW_DIRECTION),
    )

    emitter.emit(
        f"alert tcp !{known} any -> {outstations} {ports}",
        [],
        "Unknown host to DNP3 port",
        TrafficPattern(PatternKind.PAYLOAD_PORT),
    )
    emitter.emit(
        f"alert tcp {masters} any -> {outstations} !{ports}",
        [],
        "Master traffic to unexpected port",
        TrafficPattern(PatternKind.PAYLOAD_PORT),
    )

    request_keys = sorted(profile.timing_stats, key=lambda key: (criticality(key[2]), ip_address(key[0]), key[1]))
    for master_ip, address, code in request_keys:
        stats = profile.timing_stats[(master_ip, address, code)]
        count = stats.max_burst + 1
        emitter.emit(
            f"alert tcp {master_ip} any -> {outstations} {ports}",
            [
                _hex(address.to_bytes(2, "little")), f"offset:{DESTINATION_OFFSET}", "depth:2",
                _hex(bytes([code])), "offset:12", "depth:1",
                f"threshold: type both, track by_src, count {count}, seconds {config.window}",
            ],
            f"{describe_function(code)} rate above baseline from {master_ip} to {address}",
            TrafficPattern(
                PatternKind.RATE,
                src_ip=master_ip,
                outstation_address=address,
                function_code=code,
                evidence=(
                    ("max_burst", float(stats.max_burst)),
                    ("mean_interval", stats.mean_interval),
                    ("std_interval", stats.std_interval),
                ),
            ),
        )

    emitter.emit(
        f"alert tcp !{masters} any -> {outstations} {ports}",
        [
            _hex(b"\x05\x64"), "depth:2",
            f"threshold: type both, track by_src, count {config.flood_count}, seconds {config.window}",
        ],
        "DNP3 frame flood from unknown source",
        TrafficPattern(PatternKind.RATE),
    )

    logger.info(f"Generated {len(emitter.rules)} rules from baseline {profile.capture_id}")
    return emitter.rules


def render_generated(rules: Sequence[GeneratedRule]) -> str:
    return "".join(generated.text + "\n" for generated in rules)
