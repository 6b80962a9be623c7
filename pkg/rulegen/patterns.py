from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Optional, Tuple, Union

from dnp3 import is_critical
from pipeline.decoder import ParsedPacket

from .baseline import BaselineProfile, TimingKey, USEC_PER_SEC
from .constants import DEFAULT_K_SIGMA, PatternKind


class Known:
    """Marker returned for traffic that fits the baseline."""

    def __repr__(self) -> str:
        return "KNOWN"


KNOWN = Known()


@dataclass(frozen=True)
class TrafficPattern:
    """
    One deviation from the baseline.

    Kind 1 carries endpoints and port, kind 2 the offending direction,
    kind 3 the function code and kind 4 the full timing key.
    """
    kind: int
    src_ip: Optional[str] = None
    dst_ip: Optional[str] = None
    port: Optional[int] = None
    outstation_address: Optional[int] = None
    function_code: Optional[int] = None
    evidence: Tuple[Tuple[str, float], ...] = ()

    def evidence_dict(self) -> Dict[str, float]:
        return dict(self.evidence)


@dataclass
class RateTracker:
    """Sliding-window arrival times per timing key, fed during classification."""
    window: int
    arrivals: Dict[TimingKey, Deque[int]] = field(default_factory=dict)

    def observe(self, key: TimingKey, now: int) -> int:
        times = self.arrivals.setdefault(key, deque())
        times.append(now)
        while times and now - times[0] >= self.window * USEC_PER_SEC:
            times.popleft()
        return len(times)


def _is_request(pkt: ParsedPacket, profile: BaselineProfile) -> bool:
    if pkt.dnp3 is not None:
        return pkt.dnp3.is_request
    return pkt.dst_port in profile.ports


def classify_observation(
    profile: BaselineProfile,
    pkt: ParsedPacket,
    k_sigma: float = DEFAULT_K_SIGMA,
    rates: Optional[RateTracker] = None,
) -> Union[TrafficPattern, Known]:
    """
    Compare one packet with the baseline.

    Returns KNOWN when endpoints, port and function code were all seen and
    the rate stays in bounds; otherwise the lowest-numbered pattern kind
    that applies. Rate checks need a ``rates`` tracker shared across calls.
    """
    endpoints = profile.endpoints
    if (
        pkt.src_ip not in endpoints
        or pkt.dst_ip not in endpoints
        or not ({pkt.src_port, pkt.dst_port} & profile.ports)
    ):
        return TrafficPattern(PatternKind.PAYLOAD_PORT, pkt.src_ip, pkt.dst_ip, port=pkt.dst_port)

    request = _is_request(pkt, profile)
    master, outstation = (pkt.src_ip, pkt.dst_ip) if request else (pkt.dst_ip, pkt.src_ip)
    if master not in profile.masters or outstation not in profile.outstations:
        return TrafficPattern(PatternKind.FLOW_DIRECTION, pkt.src_ip, pkt.dst_ip, port=pkt.dst_port)

    frame = pkt.dnp3
    if frame is None or frame.function_code is None or not request:
        return KNOWN
    address = frame.link.destination
    code = frame.function_code
    if code not in profile.functions_for(master, address):
        kind = PatternKind.CRITICAL_COMMAND if is_critical(code) else PatternKind.PAYLOAD_PORT
        return TrafficPattern(kind, pkt.src_ip, pkt.dst_ip, port=pkt.dst_port, outstation_address=address, function_code=code)

    key = (master, address, code)
    stats = profile.timing_stats.get(key)
    if rates is not None and stats is not None:
        seen = rates.observe(key, pkt.timestamp)
        bound = stats.rate_bound(k_sigma)
        if seen >= bound:
            return TrafficPattern(
                PatternKind.RATE,
                pkt.src_ip,
                pkt.dst_ip,
                port=pkt.dst_port,
                outstation_address=address,
                function_code=code,
                evidence=(("window_count", float(seen)), ("bound", float(bound))),
            )
    return KNOWN
