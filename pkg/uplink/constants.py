PROTOCOL_VERSION = 1

DEFAULT_MASTER_PORT = 7000
DEFAULT_SPOOL_SIZE = 10_000

# longest line either side accepts before treating the stream as garbage
MAX_LINE_BYTES = 1 << 20

POLL_INTERVAL = 0.2
RECONNECT_DELAY = 1.0
PING_INTERVAL = 5.0
PRESENCE_TTL = 30


class MessageType:
    HELLO = "hello"
    HELLO_ACK = "hello_ack"
    ALERT = "alert"
    ACK = "ack"
    RULE_PUSH = "rule_push"
    RULE_ACK = "rule_ack"
    PING = "ping"
    ERROR = "error"

    ALL = (HELLO, HELLO_ACK, ALERT, ACK, RULE_PUSH, RULE_ACK, PING, ERROR)


class RuleAckStatus:
    APPLIED = "applied"
    STALE = "stale"
    COMPILE_FAILED = "compile_failed"
    CHECKSUM_MISMATCH = "checksum_mismatch"

    ALL = (APPLIED, STALE, COMPILE_FAILED, CHECKSUM_MISMATCH)

    @classmethod
    def choices(cls) -> list:
        return [
            (cls.APPLIED, "Applied"),
            (cls.STALE, "Stale"),
            (cls.COMPILE_FAILED, "Compile failed"),
            (cls.CHECKSUM_MISMATCH, "Checksum mismatch"),
        ]
