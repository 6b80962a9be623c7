"""
In-order rule evaluation.

Rules are tried strictly by position. Each header test and each evaluable
option test adds one to ``options_evaluated``; the first failing check ends
the rule. The first matching rule wins unless ``evaluate_all`` is set.
"""
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, Iterable, List, Optional, Tuple
import logging

from .constants import FlowKeyword, RuleAction, RuleDirection, RuleProtocol, ThresholdTrack
from .model import ContentOption, FlowOption, Rule, RuleHeader, ThresholdOption
from .ruleset import CompiledRuleSet
from .threshold import ThresholdState

if TYPE_CHECKING:
    from pipeline.decoder import ParsedPacket
    from pipeline.flows import FlowVerdict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Alert:
    timestamp: int
    gid: int
    sid: int
    msg: str
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    protocol: str
    action: str = RuleAction.ALERT
    position: Optional[int] = None
    function_code: Optional[int] = None
    options_evaluated: int = 0
    rule_version: int = 0

    @property
    def rule_id(self) -> Tuple[int, int]:
        return (self.gid, self.sid)

    @property
    def from_rule(self) -> bool:
        return self.position is not None

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "Alert":
        return cls(**{name: data[name] for name in cls.__dataclass_fields__ if name in data})


@dataclass
class Evaluation:
    alerts: List[Alert] = field(default_factory=list)
    drop: bool = False
    suppressed: bool = False
    options_evaluated: int = 0

    @property
    def first(self) -> Optional[Alert]:
        return self.alerts[0] if self.alerts else None


def _protocol_matches(rule_protocol: str, packet_protocol: str) -> bool:
    return rule_protocol == RuleProtocol.IP or rule_protocol == packet_protocol


def header_matches(header: RuleHeader, pkt: "ParsedPacket") -> bool:
    if not _protocol_matches(header.protocol, pkt.protocol):
        return False

    def oriented(src_ip, src_port, dst_ip, dst_port) -> bool:
        return (
            header.src.matches(src_ip)
            and header.src_port.matches(src_port)
            and header.dst.matches(dst_ip)
            and header.dst_port.matches(dst_port)
        )

    if oriented(pkt.src_ip, pkt.src_port, pkt.dst_ip, pkt.dst_port):
        return True
    if header.direction == RuleDirection.BIDIRECTIONAL:
        return oriented(pkt.dst_ip, pkt.dst_port, pkt.src_ip, pkt.src_port)
    return False


def content_matches(option: ContentOption, payload: bytes) -> bool:
    start = option.offset or 0
    end = start + option.depth if option.depth is not None else len(payload)
    return option.pattern in payload[start:end]


def _to_server(pkt: "ParsedPacket", verdict: "FlowVerdict") -> bool:
    if verdict.from_initiator is not None:
        return verdict.from_initiator
    # unknown initiator: the service side is assumed to hold the lower port
    return pkt.dst_port < pkt.src_port


def flow_matches(option: FlowOption, pkt: "ParsedPacket", verdict: "FlowVerdict") -> bool:
    for keyword in option.keywords:
        if keyword == FlowKeyword.ESTABLISHED and not verdict.established:
            return False
        if keyword == FlowKeyword.NOT_ESTABLISHED and verdict.established:
            return False
        if keyword == FlowKeyword.TO_SERVER and not _to_server(pkt, verdict):
            return False
        if keyword == FlowKeyword.TO_CLIENT and _to_server(pkt, verdict):
            return False
    return True


def _track_value(option: ThresholdOption, pkt: "ParsedPacket") -> str:
    return pkt.src_ip if option.track == ThresholdTrack.BY_SRC else pkt.dst_ip


class _RuleMatcher:
    def __init__(self, pkt, verdict, threshold_state: ThresholdState, now: int, pending: Dict):
        self.pkt = pkt
        self.verdict = verdict
        self.threshold_state = threshold_state
        self.now = now
        self.pending = pending
        self.cost = 0

    def matches(self, rule: Rule) -> bool:
        self.cost += 1
        if not header_matches(rule.header, self.pkt):
            return False
        if rule.header.protocol not in RuleProtocol.FULL_OPTIONS:
            return True

        if rule.preproc:
            self.cost += 1
            if rule.rule_id not in self.pending:
                return False

        for option in rule.checks:
            if rule.preproc and isinstance(option, ContentOption):
                continue
            self.cost += 1
            if not self._check(rule, option):
                return False
        return True

    def _check(self, rule: Rule, option) -> bool:
        if isinstance(option, ContentOption):
            return content_matches(option, self.pkt.tcp_payload)
        if isinstance(option, FlowOption):
            return flow_matches(option, self.pkt, self.verdict)
        if isinstance(option, ThresholdOption):
            return self.threshold_state.check(rule.rule_id, option, _track_value(option, self.pkt), self.now)
        return True


def _alert(pkt, *, gid, sid, msg, action, position, cost, version) -> Alert:
    return Alert(
        timestamp=pkt.timestamp,
        gid=gid,
        sid=sid,
        msg=msg,
        src_ip=pkt.src_ip,
        src_port=pkt.src_port,
        dst_ip=pkt.dst_ip,
        dst_port=pkt.dst_port,
        protocol=pkt.protocol,
        action=action,
        position=position,
        function_code=pkt.dnp3.function_code if pkt.dnp3 is not None else None,
        options_evaluated=cost,
        rule_version=version,
    )


def evaluate(
    ruleset: CompiledRuleSet,
    pkt: "ParsedPacket",
    verdict: "FlowVerdict",
    threshold_state: ThresholdState,
    clock: Optional[Callable[[], int]] = None,
    detections: Iterable = (),
    evaluate_all: bool = False,
) -> Evaluation:
    """
    Evaluate one packet against the rule set.

    Detector findings (objects with gid, sid and msg) are either bound to a
    preproc rule with the same (gid, sid), and reported when evaluation
    reaches that rule, or reported directly without a position. A matching
    pass rule suppresses everything for the packet.
    """
    now = clock() if clock is not None else pkt.timestamp
    pending = {(d.gid, d.sid): d for d in detections}
    matcher = _RuleMatcher(pkt, verdict, threshold_state, now, pending)
    result = Evaluation()

    for rule in ruleset.rules:
        if not matcher.matches(rule):
            continue
        if rule.action == RuleAction.PASS:
            logger.debug(f"Packet passed by sid {rule.sid} at position {rule.position}")
            return Evaluation(suppressed=True, options_evaluated=matcher.cost)
        pending.pop(rule.rule_id, None)
        result.alerts.append(_alert(
            pkt,
            gid=rule.gid,
            sid=rule.sid,
            msg=rule.msg,
            action=rule.action,
            position=rule.position,
            cost=matcher.cost,
            version=ruleset.version,
        ))
        result.drop = result.drop or rule.is_drop
        if not evaluate_all:
            break

    bindings = ruleset.preproc_bindings
    for rule_id, detection in pending.items():
        if rule_id in bindings:
            continue
        result.alerts.append(_alert(
            pkt,
            gid=detection.gid,
            sid=detection.sid,
            msg=detection.msg,
            action=RuleAction.ALERT,
            position=None,
            cost=matcher.cost,
            version=ruleset.version,
        ))
    result.options_evaluated = matcher.cost
    return result


def evaluate_packet(
    ruleset: CompiledRuleSet,
    pkt: "ParsedPacket",
    verdict: "FlowVerdict",
    threshold_state: ThresholdState,
    clock: Optional[Callable[[], int]] = None,
) -> Optional[Alert]:
    """First-match evaluation without detector input. Returns the alert or None."""
    return evaluate(ruleset, pkt, verdict, threshold_state, clock=clock).first
