from .alerts import PreprocAlert
from .checks import check_frame_crc, check_tcp_sequence
from .constants import DETECTOR_MESSAGES, DetectorSid, SboKeyMode
from .critical import screen_critical
from .sbo import SboState, track_select_operate
from .suite import DetectorConfig, DetectorSuite

__all__ = [
    'PreprocAlert',
    'check_frame_crc',
    'check_tcp_sequence',
    'DETECTOR_MESSAGES',
    'DetectorSid',
    'SboKeyMode',
    'screen_critical',
    'SboState',
    'track_select_operate',
    'DetectorConfig',
    'DetectorSuite',
]
