"""
Deterministic TCP session construction with scapy.

Every packet is serialized immediately, so checksums and the IP id are
fixed at build time and identical across runs.
"""
from typing import List, Optional

from scapy.layers.inet import ICMP, IP, TCP
from scapy.layers.l2 import Ether
from scapy.packet import Raw

from pipeline.capture import CaptureRecord

SEQ_MODULO = 1 << 32
WINDOW = 8192
HANDSHAKE_STEP_US = 500


def mac_for(ip: str) -> str:
    octets = [int(part) for part in ip.split(".")]
    return "02:00:" + ":".join(f"{octet:02x}" for octet in octets)


def build_packet(
    src_ip: str,
    dst_ip: str,
    sport: int,
    dport: int,
    flags: str,
    seq: int,
    ack: int,
    payload: bytes = b"",
    src_mac: Optional[str] = None,
) -> bytes:
    pkt = (
        Ether(src=src_mac or mac_for(src_ip), dst=mac_for(dst_ip))
        / IP(src=src_ip, dst=dst_ip, id=0, ttl=64)
        / TCP(sport=sport, dport=dport, flags=flags, seq=seq % SEQ_MODULO, ack=ack % SEQ_MODULO, window=WINDOW)
    )
    if payload:
        pkt = pkt / Raw(load=payload)
    return bytes(pkt)


def build_icmp_echo(src_ip: str, dst_ip: str, ident: int = 1, sequence: int = 1) -> bytes:
    pkt = (
        Ether(src=mac_for(src_ip), dst=mac_for(dst_ip))
        / IP(src=src_ip, dst=dst_ip, id=0, ttl=64)
        / ICMP(type=8, code=0, id=ident, seq=sequence)
        / Raw(load=b"dnp3ids-ping")
    )
    return bytes(pkt)


class TcpSession:
    """One client/server connection with correct seq/ack progression."""

    def __init__(
        self,
        client_ip: str,
        client_port: int,
        server_ip: str,
        server_port: int,
        client_isn: int,
        server_isn: int,
        client_mac: Optional[str] = None,
    ):
        self.client_ip = client_ip
        self.client_port = client_port
        self.server_ip = server_ip
        self.server_port = server_port
        self.client_mac = client_mac
        self.client_isn = client_isn
        self.server_isn = server_isn
        self.client_seq = client_isn
        self.server_seq = server_isn

    def _from_client(self, ts: int, flags: str, payload: bytes = b"") -> CaptureRecord:
        data = build_packet(
            self.client_ip, self.server_ip, self.client_port, self.server_port,
            flags, self.client_seq, self.server_seq, payload, src_mac=self.client_mac,
        )
        return CaptureRecord(timestamp=ts, data=data)

    def _from_server(self, ts: int, flags: str, payload: bytes = b"") -> CaptureRecord:
        data = build_packet(
            self.server_ip, self.client_ip, self.server_port, self.client_port,
            flags, self.server_seq, self.client_seq, payload,
        )
        return CaptureRecord(timestamp=ts, data=data)

    def syn(self, ts: int) -> CaptureRecord:
        record = CaptureRecord(
            timestamp=ts,
            data=build_packet(
                self.client_ip, self.server_ip, self.client_port, self.server_port,
                "S", self.client_seq, 0, src_mac=self.client_mac,
            ),
        )
        self.client_seq += 1
        return record

    def handshake(self, ts: int) -> List[CaptureRecord]:
        records = [self.syn(ts)]
        records.append(self._from_server(ts + HANDSHAKE_STEP_US, "SA"))
        self.server_seq += 1
        records.append(self._from_client(ts + 2 * HANDSHAKE_STEP_US, "A"))
        return records

    def client_send(self, ts: int, payload: bytes) -> CaptureRecord:
        record = self._from_client(ts, "PA", payload)
        self.client_seq += len(payload)
        return record

    def server_send(self, ts: int, payload: bytes) -> CaptureRecord:
        record = self._from_server(ts, "PA", payload)
        self.server_seq += len(payload)
        return record

    def teardown(self, ts: int) -> List[CaptureRecord]:
        records = [self._from_client(ts, "FA")]
        self.client_seq += 1
        records.append(self._from_server(ts + HANDSHAKE_STEP_US, "FA"))
        self.server_seq += 1
        records.append(self._from_client(ts + 2 * HANDSHAKE_STEP_US, "A"))
        return records


def merge_records(*streams: List[CaptureRecord]) -> List[CaptureRecord]:
    """Merge record lists into timestamp order; ties keep argument order."""
    combined = [record for stream in streams for record in stream]
    return sorted(combined, key=lambda record: record.timestamp)
