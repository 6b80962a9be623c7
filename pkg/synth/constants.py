class AttackKind:
    SELECT_OPERATE_REPLAY = "select_operate_replay"
    DIRECT_OPERATE = "direct_operate"
    BROADCAST_REQUEST = "broadcast_request"
    DISABLE_UNSOLICITED = "disable_unsolicited"
    STOP_APPLICATION = "stop_application"
    COLD_RESTART = "cold_restart"

    ALL = (
        SELECT_OPERATE_REPLAY,
        DIRECT_OPERATE,
        BROADCAST_REQUEST,
        DISABLE_UNSOLICITED,
        STOP_APPLICATION,
        COLD_RESTART,
    )


class FloodKind:
    DNP3_FLOOD = "dnp3_flood"
    SYN_FLOOD = "syn_flood"
    PORT_SCAN = "port_scan"

    ALL = (DNP3_FLOOD, SYN_FLOOD, PORT_SCAN)


class CrcSite:
    HEADER = "header"
    BODY = "body"

    ALL = (HEADER, BODY)


BENIGN = "benign"
ORDERING = "ordering"

# class 1, 2, 3 and 0 poll, all objects
CLASS_POLL = bytes.fromhex("3C0206 3C0306 3C0406 3C0106")
# unsolicited classes 1-3
UNSOLICITED_CLASSES = bytes.fromhex("3C0206 3C0306 3C0406")
# group 12 var 1 CROB, one point, latch on, 1000 ms
CROB = bytes.fromhex("0C0128 0100 0000 03 01 E8030000 00000000 00")
# group 30 var 2, one 16-bit analog
ANALOG_RESPONSE = bytes.fromhex("1E0200 0000 01 3412")

RESPONSE_DELAY_US = 20_000
OPERATE_DELAY_US = 300_000
