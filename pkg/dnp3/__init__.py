from .crc import crc16_dnp
from .frame import (
    LinkHeader,
    TransportHeader,
    ApplicationHeader,
    Dnp3Frame,
    parse_frame,
    parse_frames,
    iter_frames,
    encode_frame,
    build_frame,
)
from .functions import describe_function, is_critical, is_broadcast

__all__ = [
    'crc16_dnp',
    'LinkHeader',
    'TransportHeader',
    'ApplicationHeader',
    'Dnp3Frame',
    'parse_frame',
    'parse_frames',
    'iter_frames',
    'encode_frame',
    'build_frame',
    'describe_function',
    'is_critical',
    'is_broadcast',
]
