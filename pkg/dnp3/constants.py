START_BYTES = b"\x05\x64"
LINK_HEADER_SIZE = 10
LINK_HEADER_CRC_SPAN = 8
BLOCK_SIZE = 16
CRC_SIZE = 2
MIN_LENGTH = 5
MAX_USER_DATA = 250
FUNCTION_CODE_OFFSET = 12

DEFAULT_DNP3_PORT = 20000


class LinkControl:
    DIR = 0x80
    PRM = 0x40
    FCB = 0x20
    FCV = 0x10
    FUNCTION_MASK = 0x0F

    # DIR=1 PRM=1, unconfirmed user data
    MASTER_USER_DATA = 0xC4
    # DIR=0 PRM=1, unconfirmed user data
    OUTSTATION_USER_DATA = 0x44


class TransportFlags:
    FIN = 0x80
    FIR = 0x40
    SEQUENCE_MASK = 0x3F


class AppControlFlags:
    FIR = 0x80
    FIN = 0x40
    CON = 0x20
    UNS = 0x10
    SEQUENCE_MASK = 0x0F


class Direction:
    REQUEST = "request"
    RESPONSE = "response"


class FunctionCode:
    CONFIRM = 0x00
    READ = 0x01
    WRITE = 0x02
    SELECT = 0x03
    OPERATE = 0x04
    DIRECT_OPERATE = 0x05
    DIRECT_OPERATE_NR = 0x06
    COLD_RESTART = 0x0D
    WARM_RESTART = 0x0E
    STOP_APPLICATION = 0x12
    ENABLE_UNSOLICITED = 0x14
    DISABLE_UNSOLICITED = 0x15
    MAX_REQUEST = 0x21
    RESPONSE = 0x81
    UNSOLICITED_RESPONSE = 0x82


FUNCTION_NAMES = {
    0x00: "Confirm",
    0x01: "Read",
    0x02: "Write",
    0x03: "Select",
    0x04: "Operate",
    0x05: "Dir operate",
    0x06: "Dir operate-No resp",
    0x07: "Freeze",
    0x08: "Freeze-No resp",
    0x09: "Freeze clear",
    0x0A: "Freeze clear-No resp",
    0x0B: "Freeze at time",
    0x0C: "Freeze at time-No resp",
    0x0D: "Cold restart",
    0x0E: "Warm restart",
    0x0F: "Initialize data",
    0x10: "Initialize application",
    0x11: "Start application",
    0x12: "Stop application",
    0x13: "Save configuration",
    0x14: "Enable unsolicited",
    0x15: "Disable unsolicited",
    0x16: "Assign class",
    0x17: "Delay measurement",
    0x18: "Record current time",
    0x19: "Open file",
    0x1A: "Close file",
    0x1B: "Delete file",
    0x1C: "Get file information",
    0x1D: "Authenticate file",
    0x1E: "Abort file",
}

RESPONSE_NAMES = {
    FunctionCode.RESPONSE: "Response",
    FunctionCode.UNSOLICITED_RESPONSE: "Unsolicited response",
}

DEFAULT_CRITICAL_FUNCTIONS = frozenset({
    FunctionCode.SELECT,
    FunctionCode.OPERATE,
    FunctionCode.DIRECT_OPERATE,
    FunctionCode.DIRECT_OPERATE_NR,
    FunctionCode.COLD_RESTART,
    FunctionCode.WARM_RESTART,
    FunctionCode.STOP_APPLICATION,
    FunctionCode.DISABLE_UNSOLICITED,
})

# IEEE 1815 all-stations addresses
DEFAULT_BROADCAST_ADDRESSES = frozenset({0xFFFD, 0xFFFE, 0xFFFF})
