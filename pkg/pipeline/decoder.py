from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from scapy.layers.inet import IP, TCP, UDP, ICMP
from scapy.layers.l2 import Ether
from scapy.packet import Raw

from dnp3 import Dnp3Frame, iter_frames
from dnp3.constants import START_BYTES
from dnp3.exceptions import Dnp3Error

from .capture import CaptureRecord

ETHERTYPE_IPV4 = 0x0800


class Protocol:
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"


class TcpFlags:
    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    PSH = 0x08
    ACK = 0x10


class SkipReason:
    NOT_IPV4 = "not_ipv4"
    NOT_TCP = "not_tcp"
    MALFORMED = "malformed"


Endpoint = Tuple[str, int]


@dataclass(frozen=True)
class ParsedPacket:
    timestamp: int
    src_ip: str
    dst_ip: str
    protocol: str = Protocol.TCP
    src_port: int = 0
    dst_port: int = 0
    tcp_flags: int = 0
    tcp_seq: int = 0
    tcp_ack: int = 0
    tcp_payload: bytes = b""
    dnp3: Optional[Dnp3Frame] = None
    dnp3_frames: Tuple[Dnp3Frame, ...] = field(default=())
    dnp3_error: Optional[str] = None
    icmp_type: Optional[int] = None

    @property
    def is_tcp(self) -> bool:
        return self.protocol == Protocol.TCP

    @property
    def source(self) -> Endpoint:
        return (self.src_ip, self.src_port)

    @property
    def destination(self) -> Endpoint:
        return (self.dst_ip, self.dst_port)

    def has_flag(self, flag: int) -> bool:
        return bool(self.tcp_flags & flag)

    @property
    def five_tuple(self) -> Tuple[str, int, str, int, str]:
        return (self.src_ip, self.src_port, self.dst_ip, self.dst_port, self.protocol)


@dataclass(frozen=True)
class Skip:
    reason: str


def _dnp3_frames(payload: bytes) -> Tuple[Tuple[Dnp3Frame, ...], Optional[str]]:
    if payload[:2] != START_BYTES:
        return (), None
    frames: List[Dnp3Frame] = []
    try:
        for frame in iter_frames(payload):
            frames.append(frame)
    except Dnp3Error as e:
        return tuple(frames), e.reason
    return tuple(frames), None


def decode_packet(record: CaptureRecord) -> Union[ParsedPacket, Skip]:
    """
    Decode Ethernet → IPv4 → TCP (ICMP and UDP header-only).

    Never raises: undecodable records come back as Skip with a reason.
    """
    try:
        frame = Ether(record.data)
        if frame.type != ETHERTYPE_IPV4 or IP not in frame:
            return Skip(SkipReason.NOT_IPV4)
        ip = frame[IP]
        if ip.version != 4:
            return Skip(SkipReason.NOT_IPV4)

        if TCP in ip:
            tcp = ip[TCP]
            payload = bytes(tcp[Raw].load) if Raw in tcp else b""
            frames, error = _dnp3_frames(payload)
            return ParsedPacket(
                timestamp=record.timestamp,
                src_ip=ip.src,
                dst_ip=ip.dst,
                protocol=Protocol.TCP,
                src_port=int(tcp.sport),
                dst_port=int(tcp.dport),
                tcp_flags=int(tcp.flags),
                tcp_seq=int(tcp.seq),
                tcp_ack=int(tcp.ack),
                tcp_payload=payload,
                dnp3=frames[0] if frames else None,
                dnp3_frames=frames,
                dnp3_error=error,
            )
        if UDP in ip:
            udp = ip[UDP]
            return ParsedPacket(
                timestamp=record.timestamp,
                src_ip=ip.src,
                dst_ip=ip.dst,
                protocol=Protocol.UDP,
                src_port=int(udp.sport),
                dst_port=int(udp.dport),
            )
        if ICMP in ip:
            return ParsedPacket(
                timestamp=record.timestamp,
                src_ip=ip.src,
                dst_ip=ip.dst,
                protocol=Protocol.ICMP,
                icmp_type=int(ip[ICMP].type),
            )
        return Skip(SkipReason.NOT_TCP)
    except Exception:
        return Skip(SkipReason.MALFORMED)
