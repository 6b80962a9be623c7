from typing import AbstractSet, Optional

from dnp3 import Dnp3Frame, is_broadcast, is_critical
from rules.addresses import AddressExpr

from .alerts import PreprocAlert
from .constants import MASTER_ONLY_FUNCTIONS, DetectorSid


def screen_critical(
    frame: Dnp3Frame,
    src_ip: str,
    authorized_masters: AddressExpr,
    critical: Optional[AbstractSet[int]] = None,
    broadcast: Optional[AbstractSet[int]] = None,
) -> Optional[PreprocAlert]:
    if not frame.is_request or frame.function_code is None:
        return None
    code = frame.function_code
    if is_broadcast(frame.link.destination, broadcast) and is_critical(code, critical):
        return PreprocAlert.for_sid(DetectorSid.BROADCAST_CRITICAL)
    sid = MASTER_ONLY_FUNCTIONS.get(code)
    if sid is not None and not authorized_masters.matches(src_ip):
        return PreprocAlert.for_sid(sid)
    return None
