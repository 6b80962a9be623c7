from dnp3.constants import FunctionCode


class PatternKind:
    PAYLOAD_PORT = 1
    FLOW_DIRECTION = 2
    CRITICAL_COMMAND = 3
    RATE = 4

    ALL = (PAYLOAD_PORT, FLOW_DIRECTION, CRITICAL_COMMAND, RATE)
    # high-impact rules first
    PRIORITY = (CRITICAL_COMMAND, FLOW_DIRECTION, PAYLOAD_PORT, RATE)


class RuleVariable:
    MASTERS = "MASTERS"
    OUTSTATIONS = "OUTSTATIONS"
    KNOWN_HOSTS = "KNOWN_HOSTS"


# most damaging first; codes not listed sort after, by value
CRITICALITY = (
    FunctionCode.DIRECT_OPERATE,
    FunctionCode.DIRECT_OPERATE_NR,
    FunctionCode.OPERATE,
    FunctionCode.SELECT,
    FunctionCode.COLD_RESTART,
    FunctionCode.WARM_RESTART,
    FunctionCode.STOP_APPLICATION,
    FunctionCode.DISABLE_UNSOLICITED,
)

FIRST_GENERATED_SID = 1_000_000
PATTERN_METADATA_KEY = "pattern-kind"
DEFAULT_K_SIGMA = 3.0
DEFAULT_WINDOW = 10
DEFAULT_FLOOD_COUNT = 5
# link destination octets in the TCP payload
DESTINATION_OFFSET = 4
