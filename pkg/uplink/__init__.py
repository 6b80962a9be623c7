from .client import AlertSpool, SensorUplink
from .constants import DEFAULT_MASTER_PORT, PROTOCOL_VERSION, MessageType, RuleAckStatus
from .exceptions import (
    AuthenticationFailed,
    ConnectionClosed,
    HandshakeMismatch,
    MalformedMessage,
    SensorConfigError,
    UplinkError,
)
from .messages import (
    AlertRecord,
    RulePush,
    alert_from_message,
    decode_alert,
    decode_message,
    encode_alert,
    encode_message,
    ruleset_checksum,
)
from .sensor import SensorConfig, SensorNode
from .server import MasterBackend, MasterServer
from .tokens import issue_token, verify_token

__all__ = [
    'AlertSpool',
    'SensorUplink',
    'DEFAULT_MASTER_PORT',
    'PROTOCOL_VERSION',
    'MessageType',
    'RuleAckStatus',
    'AuthenticationFailed',
    'ConnectionClosed',
    'HandshakeMismatch',
    'MalformedMessage',
    'SensorConfigError',
    'UplinkError',
    'AlertRecord',
    'RulePush',
    'alert_from_message',
    'decode_alert',
    'decode_message',
    'encode_alert',
    'encode_message',
    'ruleset_checksum',
    'SensorConfig',
    'SensorNode',
    'MasterBackend',
    'MasterServer',
    'issue_token',
    'verify_token',
]
