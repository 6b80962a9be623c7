from typing import List, Optional, Sequence

from scapy.layers.inet import IP, TCP
from scapy.layers.l2 import Ether
from scapy.packet import Raw

from dnp3.constants import BLOCK_SIZE, LINK_HEADER_SIZE, MIN_LENGTH, START_BYTES
from pipeline.capture import CaptureRecord

from .constants import CrcSite
from .exceptions import IndexNotDnp3, SynthError

# destination address high octet: covered by the header CRC, changes neither
# the frame length nor the start octets
DEFAULT_HEADER_OCTET = 5


def corrupt_crc(
    records: Sequence[CaptureRecord],
    index: int,
    site: str = CrcSite.HEADER,
    octet: Optional[int] = None,
    bit: int = 0,
) -> List[CaptureRecord]:
    """
    Flip one bit of CRC-covered DNP3 data in record ``index``.

    ``octet`` is relative to the link header (header site, 2..7) or to the
    first user data block (body site). The TCP checksum is recomputed, so
    only the DNP3 layer is inconsistent. Flipping the same bit twice
    restores the original record.

    Raises:
        IndexNotDnp3: the record carries no DNP3 frame
    """
    if site not in CrcSite.ALL:
        raise SynthError(f"site must be one of {CrcSite.ALL}, got '{site}'")
    if not 0 <= index < len(records):
        raise IndexNotDnp3(index)
    record = records[index]
    pkt = Ether(record.data)
    if TCP not in pkt or Raw not in pkt[TCP]:
        raise IndexNotDnp3(index)
    payload = bytearray(pkt[TCP][Raw].load)
    if payload[:2] != START_BYTES or len(payload) <= LINK_HEADER_SIZE:
        raise IndexNotDnp3(index)

    if site == CrcSite.HEADER:
        position = DEFAULT_HEADER_OCTET if octet is None else octet
        if not 2 <= position < 8:
            raise SynthError(f"header octet must be in 2..7, got {position}")
    else:
        position = LINK_HEADER_SIZE + (0 if octet is None else octet)
        first_block = min(BLOCK_SIZE, payload[2] - MIN_LENGTH)
        if not LINK_HEADER_SIZE <= position < LINK_HEADER_SIZE + first_block:
            raise SynthError(f"body octet {octet} is outside the first data block")
    payload[position] ^= 1 << (bit & 7)

    pkt[TCP][Raw].load = bytes(payload)
    del pkt[TCP].chksum
    del pkt[IP].chksum
    corrupted = list(records)
    corrupted[index] = CaptureRecord(timestamp=record.timestamp, data=bytes(pkt), orig_len=record.orig_len)
    return corrupted


def dnp3_record_indexes(records: Sequence[CaptureRecord]) -> List[int]:
    """Indexes of records whose TCP payload starts a DNP3 frame."""
    found = []
    for index, record in enumerate(records):
        pkt = Ether(record.data)
        if TCP in pkt and Raw in pkt[TCP] and bytes(pkt[TCP][Raw].load)[:2] == START_BYTES:
            found.append(index)
    return found
