from typing import AbstractSet, Optional

from .constants import (
    FUNCTION_NAMES,
    RESPONSE_NAMES,
    DEFAULT_CRITICAL_FUNCTIONS,
    DEFAULT_BROADCAST_ADDRESSES,
)


def describe_function(code: int) -> str:
    name = FUNCTION_NAMES.get(code) or RESPONSE_NAMES.get(code)
    if name is None:
        return f"Unknown(0x{code & 0xFF:02X})"
    return name


def is_critical(code: int, critical: Optional[AbstractSet[int]] = None) -> bool:
    if critical is None:
        critical = DEFAULT_CRITICAL_FUNCTIONS
    return code in critical


def is_broadcast(destination: int, broadcast: Optional[AbstractSet[int]] = None) -> bool:
    if broadcast is None:
        broadcast = DEFAULT_BROADCAST_ADDRESSES
    return destination in broadcast
