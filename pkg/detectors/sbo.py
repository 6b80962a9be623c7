"""
Select-before-operate pairing.

A Select (0x03) records a pending entry; an Operate (0x04) must consume a
live entry with the same key. Entries older than ``select_timeout`` are
purged before every lookup.
"""
from dataclasses import dataclass, field
from hashlib import sha256
from typing import Dict, Optional, Tuple
import logging

from dnp3 import Dnp3Frame
from dnp3.constants import FunctionCode
from rules.addresses import NetworkSet

from .alerts import PreprocAlert
from .constants import DEFAULT_SELECT_TIMEOUT, DIRECT_OPERATE_FUNCTIONS, DetectorSid, SboKeyMode

logger = logging.getLogger(__name__)

USEC_PER_SEC = 1_000_000

SboKey = Tuple[str, int, str]


@dataclass
class SboState:
    authorized_masters: NetworkSet = field(default_factory=lambda: NetworkSet(()))
    select_timeout: float = DEFAULT_SELECT_TIMEOUT
    key_mode: str = SboKeyMode.DIGEST
    pending: Dict[SboKey, int] = field(default_factory=dict)
    selects: int = 0
    expired: int = 0
    consumed: int = 0

    def key(self, frame: Dnp3Frame, src_ip: str) -> SboKey:
        if self.key_mode == SboKeyMode.ADDRESSES:
            return (src_ip, frame.link.destination, "")
        return (src_ip, frame.link.destination, sha256(frame.payload).hexdigest())

    def purge(self, now: int) -> None:
        limit = int(self.select_timeout * USEC_PER_SEC)
        stale = [key for key, selected_at in self.pending.items() if now - selected_at > limit]
        for key in stale:
            del self.pending[key]
        self.expired += len(stale)


def track_select_operate(state: SboState, frame: Dnp3Frame, src_ip: str, clock: int) -> Optional[PreprocAlert]:
    """
    Pair Selects with Operates and screen direct operates.

    Args:
        state: pipeline-owned pairing state
        frame: request frame
        src_ip: sender address
        clock: current time in microseconds

    Returns:
        PreprocAlert for an unpaired Operate or an unauthorized direct
        operate, otherwise None
    """
    if not frame.is_request or frame.function_code is None:
        return None
    code = frame.function_code
    state.purge(clock)

    if code == FunctionCode.SELECT:
        key = state.key(frame, src_ip)
        if key in state.pending:
            # a repeated Select replaces the older entry
            state.expired += 1
        state.pending[key] = clock
        state.selects += 1
        return None

    if code == FunctionCode.OPERATE:
        key = state.key(frame, src_ip)
        if state.pending.pop(key, None) is not None:
            state.consumed += 1
            return None
        logger.debug(f"Operate from {src_ip} to {frame.link.destination} has no live Select")
        return PreprocAlert.for_sid(DetectorSid.OPERATE_WITHOUT_SELECT)

    if code in DIRECT_OPERATE_FUNCTIONS and not state.authorized_masters.matches(src_ip):
        return PreprocAlert.for_sid(DetectorSid.UNAUTHORIZED_DIRECT_OPERATE)
    return None
