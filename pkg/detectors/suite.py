from dataclasses import dataclass
from ipaddress import ip_network
from typing import Dict, FrozenSet, List, Optional, Tuple
import logging

from dnp3.constants import DEFAULT_BROADCAST_ADDRESSES, DEFAULT_CRITICAL_FUNCTIONS
from rules.addresses import NetworkSet

from .alerts import PreprocAlert
from .checks import check_frame_crc, check_tcp_sequence
from .constants import DEFAULT_SELECT_TIMEOUT, SboKeyMode
from .critical import screen_critical
from .sbo import SboState, track_select_operate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectorConfig:
    authorized_masters: Tuple = ()
    select_timeout: float = DEFAULT_SELECT_TIMEOUT
    sbo_key_mode: str = SboKeyMode.DIGEST
    critical_functions: FrozenSet[int] = DEFAULT_CRITICAL_FUNCTIONS
    broadcast_addresses: FrozenSet[int] = DEFAULT_BROADCAST_ADDRESSES


class DetectorSuite:
    """All semantic detectors for one pipeline. Owns the SBO state."""

    def __init__(self, config: Optional[DetectorConfig] = None):
        self.config = config or DetectorConfig()
        self.masters = NetworkSet(tuple(ip_network(net, strict=False) for net in self.config.authorized_masters))
        self.sbo = SboState(
            authorized_masters=self.masters,
            select_timeout=self.config.select_timeout,
            key_mode=self.config.sbo_key_mode,
        )

    def run(self, pkt, verdict, now: int) -> List[PreprocAlert]:
        """Run every detector on one packet; at most one alert per (gid, sid)."""
        found: Dict[Tuple[int, int], PreprocAlert] = {}

        def add(alert: Optional[PreprocAlert]) -> None:
            if alert is not None and alert.rule_id not in found:
                found[alert.rule_id] = PreprocAlert(alert.gid, alert.sid, alert.msg, pkt)

        add(check_tcp_sequence(verdict))
        for frame in pkt.dnp3_frames:
            add(check_frame_crc(frame))
            if not frame.is_request:
                continue
            add(track_select_operate(self.sbo, frame, pkt.src_ip, now))
            add(screen_critical(
                frame,
                pkt.src_ip,
                self.masters,
                self.config.critical_functions,
                self.config.broadcast_addresses,
            ))
        if found:
            logger.debug(f"Detectors flagged {sorted(found)} on packet at {pkt.timestamp}")
        return list(found.values())
