"""
DNP3 link frame codec.

Wire layout of one link frame as carried in a TCP payload:

    [05 64][length][control][dst LE][src LE][header CRC LE]
    [user data block <= 16 octets][block CRC LE] ...

``length`` counts control, destination, source and user data, never the
CRCs. User data starts with the transport octet, then the application
control octet and the function code. Responses add two octets of internal
indications. Object headers after that are kept as an opaque payload.
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from .constants import (
    START_BYTES,
    LINK_HEADER_SIZE,
    LINK_HEADER_CRC_SPAN,
    BLOCK_SIZE,
    CRC_SIZE,
    MIN_LENGTH,
    MAX_USER_DATA,
    LinkControl,
    TransportFlags,
    AppControlFlags,
    Direction,
    FunctionCode,
)
from .crc import crc16_dnp, crc_octets
from .exceptions import BadStartBytes, Truncated, LengthOutOfRange, PayloadTooLarge


@dataclass(frozen=True)
class LinkHeader:
    length: int
    control: int
    destination: int
    source: int
    header_crc: int
    start: bytes = START_BYTES

    @property
    def dir(self) -> bool:
        return bool(self.control & LinkControl.DIR)

    @property
    def prm(self) -> bool:
        return bool(self.control & LinkControl.PRM)

    @property
    def fcb(self) -> bool:
        return bool(self.control & LinkControl.FCB)

    @property
    def fcv(self) -> bool:
        return bool(self.control & LinkControl.FCV)

    @property
    def function(self) -> int:
        return self.control & LinkControl.FUNCTION_MASK

    def prefix(self) -> bytes:
        """The eight octets covered by the header CRC."""
        return (
            START_BYTES
            + bytes([self.length & 0xFF, self.control & 0xFF])
            + self.destination.to_bytes(2, "little")
            + self.source.to_bytes(2, "little")
        )


@dataclass(frozen=True)
class TransportHeader:
    fin: bool
    fir: bool
    sequence: int

    @classmethod
    def from_octet(cls, octet: int) -> "TransportHeader":
        return cls(
            fin=bool(octet & TransportFlags.FIN),
            fir=bool(octet & TransportFlags.FIR),
            sequence=octet & TransportFlags.SEQUENCE_MASK,
        )

    def to_octet(self) -> int:
        octet = self.sequence & TransportFlags.SEQUENCE_MASK
        if self.fin:
            octet |= TransportFlags.FIN
        if self.fir:
            octet |= TransportFlags.FIR
        return octet


@dataclass(frozen=True)
class ApplicationHeader:
    control: int
    function_code: int
    internal_indications: Optional[int] = None

    @property
    def fir(self) -> bool:
        return bool(self.control & AppControlFlags.FIR)

    @property
    def fin(self) -> bool:
        return bool(self.control & AppControlFlags.FIN)

    @property
    def con(self) -> bool:
        return bool(self.control & AppControlFlags.CON)

    @property
    def uns(self) -> bool:
        return bool(self.control & AppControlFlags.UNS)

    @property
    def sequence(self) -> int:
        return self.control & AppControlFlags.SEQUENCE_MASK

    def to_bytes(self) -> bytes:
        data = bytes([self.control & 0xFF, self.function_code & 0xFF])
        if self.internal_indications is not None:
            data += self.internal_indications.to_bytes(2, "little")
        return data


@dataclass(frozen=True)
class Dnp3Frame:
    link: LinkHeader
    transport: Optional[TransportHeader]
    app: Optional[ApplicationHeader]
    payload: bytes = b""
    crc_valid: Tuple[bool, ...] = field(default=(True,))

    @property
    def direction(self) -> str:
        return Direction.REQUEST if self.link.dir else Direction.RESPONSE

    @property
    def is_request(self) -> bool:
        return self.direction == Direction.REQUEST

    @property
    def function_code(self) -> Optional[int]:
        return self.app.function_code if self.app else None

    @property
    def header_crc_valid(self) -> bool:
        return self.crc_valid[0]

    @property
    def body_crc_valid(self) -> bool:
        return all(self.crc_valid[1:])

    @property
    def all_crc_valid(self) -> bool:
        return all(self.crc_valid)

    @property
    def dir_mismatch(self) -> bool:
        """DIR bit disagrees with the function-code range."""
        code = self.function_code
        if code is None:
            return False
        if self.is_request:
            return code > FunctionCode.MAX_REQUEST
        return code < FunctionCode.RESPONSE

    @property
    def user_data(self) -> bytes:
        data = b""
        if self.transport is not None:
            data += bytes([self.transport.to_octet()])
        if self.app is not None:
            data += self.app.to_bytes()
        return data + self.payload

    @property
    def wire_size(self) -> int:
        return wire_size_for(self.link.length)


def wire_size_for(length: int) -> int:
    user_len = length - MIN_LENGTH
    blocks = -(-user_len // BLOCK_SIZE)
    return LINK_HEADER_SIZE + user_len + blocks * CRC_SIZE


def _split_user_data(user: bytes, request: bool) -> Tuple[Optional[TransportHeader], Optional[ApplicationHeader], bytes]:
    if not user:
        return None, None, b""
    transport = TransportHeader.from_octet(user[0])
    if len(user) < 3:
        return transport, None, user[1:]
    iin = None
    body_start = 3
    if not request and len(user) >= 5:
        iin = int.from_bytes(user[3:5], "little")
        body_start = 5
    app = ApplicationHeader(control=user[1], function_code=user[2], internal_indications=iin)
    return transport, app, user[body_start:]


def parse_frame(data: bytes) -> Dnp3Frame:
    data = bytes(data)
    if len(data) < 2 or data[:2] != START_BYTES:
        raise BadStartBytes()
    if len(data) < LINK_HEADER_SIZE:
        raise Truncated(f"Link header needs {LINK_HEADER_SIZE} octets, got {len(data)}")

    length = data[2]
    if length < MIN_LENGTH:
        raise LengthOutOfRange(f"Link length {length} is below {MIN_LENGTH}")
    total = wire_size_for(length)
    if len(data) < total:
        raise Truncated(f"Frame needs {total} octets, got {len(data)}")

    header_crc = int.from_bytes(data[8:10], "little")
    crc_valid = [crc16_dnp(data[:LINK_HEADER_CRC_SPAN]) == header_crc]

    user = bytearray()
    remaining = length - MIN_LENGTH
    pos = LINK_HEADER_SIZE
    while remaining > 0:
        size = min(BLOCK_SIZE, remaining)
        block = data[pos:pos + size]
        block_crc = int.from_bytes(data[pos + size:pos + size + CRC_SIZE], "little")
        crc_valid.append(crc16_dnp(block) == block_crc)
        user += block
        pos += size + CRC_SIZE
        remaining -= size

    link = LinkHeader(
        length=length,
        control=data[3],
        destination=int.from_bytes(data[4:6], "little"),
        source=int.from_bytes(data[6:8], "little"),
        header_crc=header_crc,
    )
    transport, app, payload = _split_user_data(bytes(user), request=link.dir)
    return Dnp3Frame(link=link, transport=transport, app=app, payload=payload, crc_valid=tuple(crc_valid))


def encode_frame(frame: Dnp3Frame) -> bytes:
    user = frame.user_data
    if len(user) > MAX_USER_DATA:
        raise PayloadTooLarge(f"User data is {len(user)} octets, limit is {MAX_USER_DATA}")

    link = LinkHeader(
        length=MIN_LENGTH + len(user),
        control=frame.link.control,
        destination=frame.link.destination,
        source=frame.link.source,
        header_crc=0,
    )
    prefix = link.prefix()
    out = bytearray(prefix + crc_octets(prefix))
    for pos in range(0, len(user), BLOCK_SIZE):
        block = user[pos:pos + BLOCK_SIZE]
        out += block + crc_octets(block)
    return bytes(out)


def build_frame(
    destination: int,
    source: int,
    function_code: int,
    payload: bytes = b"",
    *,
    request: bool = True,
    link_control: Optional[int] = None,
    transport_seq: int = 0,
    app_seq: int = 0,
    internal_indications: int = 0,
    unsolicited: bool = False,
) -> Dnp3Frame:
    """Build a single-fragment frame with consistent length and CRC fields."""
    if link_control is None:
        link_control = LinkControl.MASTER_USER_DATA if request else LinkControl.OUTSTATION_USER_DATA
    app_control = AppControlFlags.FIR | AppControlFlags.FIN | (app_seq & AppControlFlags.SEQUENCE_MASK)
    if unsolicited:
        app_control |= AppControlFlags.UNS | AppControlFlags.CON
    app = ApplicationHeader(
        control=app_control,
        function_code=function_code,
        internal_indications=None if request else internal_indications,
    )
    transport = TransportHeader(fin=True, fir=True, sequence=transport_seq & TransportFlags.SEQUENCE_MASK)

    user_len = 1 + len(app.to_bytes()) + len(payload)
    if user_len > MAX_USER_DATA:
        raise PayloadTooLarge(f"User data is {user_len} octets, limit is {MAX_USER_DATA}")
    length = MIN_LENGTH + user_len
    draft = LinkHeader(length=length, control=link_control, destination=destination, source=source, header_crc=0)
    link = LinkHeader(
        length=length,
        control=link_control,
        destination=destination,
        source=source,
        header_crc=crc16_dnp(draft.prefix()),
    )
    blocks = -(-user_len // BLOCK_SIZE)
    return Dnp3Frame(
        link=link,
        transport=transport,
        app=app,
        payload=bytes(payload),
        crc_valid=(True,) * (1 + blocks),
    )


def iter_frames(data: bytes) -> Iterator[Dnp3Frame]:
    """
    Parse consecutive frames packed into one TCP segment.

    Stops quietly at trailing octets that do not start a frame. A frame
    cut off by the segment boundary raises Truncated.
    """
    pos = 0
    while len(data) - pos >= 2 and data[pos:pos + 2] == START_BYTES:
        frame = parse_frame(data[pos:])
        yield frame
        pos += frame.wire_size


def parse_frames(data: bytes) -> List[Dnp3Frame]:
    return list(iter_frames(data))
