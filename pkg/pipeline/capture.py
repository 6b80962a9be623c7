"""
pcap capture sources and sinks.

Reading accepts both byte orders (and nanosecond captures, which are
rounded down to microseconds). Writing always produces a native-order,
microsecond, Ethernet capture.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Union
import logging

from scapy.error import Scapy_Exception
from scapy.utils import RawPcapReader, RawPcapWriter

from .exceptions import BadMagic, TruncatedRecord, IoFailure

logger = logging.getLogger(__name__)

LINKTYPE_ETHERNET = 1
USEC_PER_SEC = 1_000_000

CaptureSource = Union[str, Path, BinaryIO]


@dataclass(frozen=True)
class CaptureRecord:
    timestamp: int
    data: bytes
    orig_len: int = -1

    def __post_init__(self) -> None:
        if self.orig_len < 0:
            object.__setattr__(self, "orig_len", len(self.data))


def _open_reader(source: CaptureSource) -> RawPcapReader:
    target = str(source) if isinstance(source, Path) else source
    try:
        return RawPcapReader(target)
    except Scapy_Exception as e:
        raise BadMagic(f"{source}: {e}")


def read_capture(source: CaptureSource) -> Iterator[CaptureRecord]:
    """Yield every record in file order, one at a time."""
    reader = _open_reader(source)
    nano = bool(getattr(reader, "nano", False))
    try:
        for data, meta in reader:
            if len(data) < meta.caplen:
                raise TruncatedRecord(
                    f"Record declares {meta.caplen} octets but only {len(data)} remain"
                )
            fraction = meta.usec // 1000 if nano else meta.usec
            yield CaptureRecord(
                timestamp=meta.sec * USEC_PER_SEC + fraction,
                data=bytes(data),
                orig_len=meta.wirelen,
            )
    finally:
        reader.close()


def write_capture(records: Iterable[CaptureRecord], destination: Union[str, Path, BinaryIO]) -> int:
    """Write records as a pcap file. Returns the number of records written."""
    target = str(destination) if isinstance(destination, Path) else destination
    count = 0
    try:
        writer = RawPcapWriter(target, linktype=LINKTYPE_ETHERNET, sync=True)
        try:
            writer.write_header(None)
            for record in records:
                sec, usec = divmod(record.timestamp, USEC_PER_SEC)
                writer.write_packet(
                    record.data,
                    sec=sec,
                    usec=usec,
                    caplen=len(record.data),
                    wirelen=record.orig_len,
                )
                count += 1
        finally:
            writer.flush()
            if not hasattr(destination, "write"):
                writer.close()
    except OSError as e:
        raise IoFailure(f"{destination}: {e}")
    logger.debug(f"Wrote {count} records to {destination}")
    return count
