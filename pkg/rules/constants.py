class RuleAction:
    ALERT = "alert"
    DROP = "drop"
    PASS = "pass"
    LOG = "log"

    ALL = (ALERT, DROP, PASS, LOG)


class RuleProtocol:
    TCP = "tcp"
    UDP = "udp"
    IP = "ip"
    ICMP = "icmp"

    ALL = (TCP, UDP, IP, ICMP)
    # protocols that get full option semantics
    FULL_OPTIONS = (TCP, IP)


class RuleDirection:
    ONE_WAY = "->"
    BIDIRECTIONAL = "<>"

    ALL = (ONE_WAY, BIDIRECTIONAL)


class FlowKeyword:
    ESTABLISHED = "established"
    NOT_ESTABLISHED = "not_established"
    TO_SERVER = "to_server"
    TO_CLIENT = "to_client"

    ALL = (ESTABLISHED, NOT_ESTABLISHED, TO_SERVER, TO_CLIENT)


class ThresholdType:
    LIMIT = "limit"
    THRESHOLD = "threshold"
    BOTH = "both"

    ALL = (LIMIT, THRESHOLD, BOTH)


class ThresholdTrack:
    BY_SRC = "by_src"
    BY_DST = "by_dst"

    ALL = (BY_SRC, BY_DST)


DEFAULT_GID = 1
PREPROC_GID = 145
PREPROC_METADATA = ("rule-type", "preproc")
