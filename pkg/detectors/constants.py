from dnp3.constants import FunctionCode
from rules.constants import PREPROC_GID


class DetectorSid:
    BAD_CRC = 1
    INVALID_SEQUENCE = 3
    OPERATE_WITHOUT_SELECT = 10
    UNAUTHORIZED_DIRECT_OPERATE = 11
    BROADCAST_CRITICAL = 12
    DISABLE_UNSOLICITED = 13
    STOP_APPLICATION = 14
    COLD_RESTART = 15


DETECTOR_MESSAGES = {
    DetectorSid.BAD_CRC: "DNP3-Bad-CRC",
    DetectorSid.INVALID_SEQUENCE: "DNP3-Invalid sequence no",
    DetectorSid.OPERATE_WITHOUT_SELECT: "Operate without Select",
    DetectorSid.UNAUTHORIZED_DIRECT_OPERATE: "Unauthorized direct operate",
    DetectorSid.BROADCAST_CRITICAL: "Broadcast critical request",
    DetectorSid.DISABLE_UNSOLICITED: "Disable unsolicited from unknown source",
    DetectorSid.STOP_APPLICATION: "Stop application from unknown source",
    DetectorSid.COLD_RESTART: "Cold restart from unknown source",
}

# function codes only authorized masters may send
MASTER_ONLY_FUNCTIONS = {
    FunctionCode.DISABLE_UNSOLICITED: DetectorSid.DISABLE_UNSOLICITED,
    FunctionCode.STOP_APPLICATION: DetectorSid.STOP_APPLICATION,
    FunctionCode.COLD_RESTART: DetectorSid.COLD_RESTART,
}

DIRECT_OPERATE_FUNCTIONS = (FunctionCode.DIRECT_OPERATE, FunctionCode.DIRECT_OPERATE_NR)


class SboKeyMode:
    DIGEST = "digest"
    ADDRESSES = "addresses"

    ALL = (DIGEST, ADDRESSES)


DEFAULT_SELECT_TIMEOUT = 10.0
GID = PREPROC_GID
