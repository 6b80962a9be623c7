"""
CRC-16/DNP as used by every DNP3 link frame.

Polynomial 0x3D65, reflected input and output, output complemented.
The check value for ASCII "123456789" is 0xEA82.
"""
import crcmod.predefined

_crc16_dnp = crcmod.predefined.mkPredefinedCrcFun("crc-16-dnp")


def crc16_dnp(data: bytes) -> int:
    return _crc16_dnp(bytes(data))


def crc_octets(data: bytes) -> bytes:
    """CRC of ``data`` in wire order (little-endian)."""
    return crc16_dnp(data).to_bytes(2, "little")
