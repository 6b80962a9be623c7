from typing import Optional

from dnp3 import Dnp3Frame

from .alerts import PreprocAlert
from .constants import DetectorSid


def check_frame_crc(frame: Dnp3Frame) -> Optional[PreprocAlert]:
    if frame.all_crc_valid:
        return None
    return PreprocAlert.for_sid(DetectorSid.BAD_CRC)


def check_tcp_sequence(verdict) -> Optional[PreprocAlert]:
    if not verdict.seq_anomaly:
        return None
    return PreprocAlert.for_sid(DetectorSid.INVALID_SEQUENCE)
