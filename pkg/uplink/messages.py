"""
Line-delimited JSON messages exchanged between sensors and the master.

Every message is one JSON object on one line with a ``type`` key. Alert
lines carry the fields of an AlertRecord under the wire names below;
optional fields are omitted when absent.
"""
from dataclasses import asdict, dataclass, field, replace
from hashlib import sha256
from typing import Any, Dict, Mapping, Optional
import json

from rules import Alert

from .constants import PROTOCOL_VERSION, MessageType
from .exceptions import MalformedMessage

ALERT_REQUIRED_KEYS = (
    "sensor_id", "seq", "ts_us", "sid", "gid", "msg",
    "src_ip", "src_port", "dst_ip", "dst_port", "proto", "rule_version",
)
ALERT_OPTIONAL_KEYS = ("dnp3_fc", "rule_pos")
INTEGER_KEYS = ("seq", "ts_us", "sid", "gid", "src_port", "dst_port", "rule_version", "dnp3_fc", "rule_pos")


@dataclass(frozen=True)
class AlertRecord:
    sensor_id: str
    seq: int
    ts_us: int
    sid: int
    gid: int
    msg: str
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    proto: str
    rule_version: int = 0
    dnp3_fc: Optional[int] = None
    rule_pos: Optional[int] = None
    # set by the master on ingest; never sent on the wire
    received_at: Optional[int] = field(default=None, compare=False)

    @classmethod
    def from_alert(cls, sensor_id: str, seq: int, alert: Alert) -> "AlertRecord":
        return cls(
            sensor_id=sensor_id,
            seq=seq,
            ts_us=alert.timestamp,
            sid=alert.sid,
            gid=alert.gid,
            msg=alert.msg,
            src_ip=alert.src_ip,
            src_port=alert.src_port,
            dst_ip=alert.dst_ip,
            dst_port=alert.dst_port,
            proto=alert.protocol,
            rule_version=alert.rule_version,
            dnp3_fc=alert.function_code,
            rule_pos=alert.position,
        )

    def with_received_at(self, received_at: int) -> "AlertRecord":
        return replace(self, received_at=received_at)

    def wire_fields(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("received_at")
        for key in ALERT_OPTIONAL_KEYS:
            if data[key] is None:
                del data[key]
        return data


@dataclass(frozen=True)
class RulePush:
    version: int
    rules: str
    variables: Dict[str, str] = field(default_factory=dict)
    sha256: str = ""

    @classmethod
    def create(cls, version: int, rules: str, variables: Optional[Mapping[str, str]] = None) -> "RulePush":
        return cls(version=version, rules=rules, variables=dict(variables or {}), sha256=ruleset_checksum(rules))

    def verify(self) -> bool:
        return self.sha256 == ruleset_checksum(self.rules)

    def to_message(self) -> Dict[str, Any]:
        return {
            "type": MessageType.RULE_PUSH,
            "version": self.version,
            "rules": self.rules,
            "vars": self.variables,
            "sha256": self.sha256,
        }

    @classmethod
    def from_message(cls, message: Mapping[str, Any]) -> "RulePush":
        _require(message, ("version", "rules", "sha256"))
        variables = message.get("vars") or {}
        if not isinstance(message["rules"], str) or not isinstance(variables, dict):
            raise MalformedMessage("rule_push rules must be text and vars an object")
        if not _is_int(message["version"]):
            raise MalformedMessage("rule_push version must be an integer")
        return cls(
            version=message["version"],
            rules=message["rules"],
            variables={str(k): str(v) for k, v in variables.items()},
            sha256=str(message["sha256"]),
        )


def ruleset_checksum(text: str) -> str:
    return sha256(text.encode("utf-8")).hexdigest()


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _require(message: Mapping[str, Any], keys) -> None:
    missing = [key for key in keys if key not in message]
    if missing:
        raise MalformedMessage(f"{message.get('type')} is missing {', '.join(missing)}")


def encode_message(message: Mapping[str, Any]) -> bytes:
    return (json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def decode_message(line: bytes) -> Dict[str, Any]:
    """
    Raises:
        MalformedMessage: not a JSON object with a known ``type``
    """
    try:
        message = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedMessage(str(e))
    if not isinstance(message, dict):
        raise MalformedMessage("expected a JSON object")
    if message.get("type") not in MessageType.ALL:
        raise MalformedMessage(f"unknown type {message.get('type')!r}")
    return message


def encode_alert(record: AlertRecord) -> bytes:
    return encode_message({"type": MessageType.ALERT, **record.wire_fields()})


def alert_from_message(message: Mapping[str, Any]) -> AlertRecord:
    _require(message, ALERT_REQUIRED_KEYS)
    for key in INTEGER_KEYS:
        if key in message and message[key] is not None and not _is_int(message[key]):
            raise MalformedMessage(f"alert field {key} must be an integer")
    values = {key: message[key] for key in ALERT_REQUIRED_KEYS}
    values.update({key: message.get(key) for key in ALERT_OPTIONAL_KEYS})
    values["sensor_id"] = str(values["sensor_id"])
    values["msg"] = str(values["msg"])
    return AlertRecord(**values)


def decode_alert(line: bytes) -> AlertRecord:
    message = decode_message(line)
    if message["type"] != MessageType.ALERT:
        raise MalformedMessage(f"expected an alert, got {message['type']}")
    return alert_from_message(message)


def hello_message(sensor_id: str, rule_version: int, token: str = "", proto_ver: int = PROTOCOL_VERSION) -> Dict[str, Any]:
    return {
        "type": MessageType.HELLO,
        "sensor_id": sensor_id,
        "proto_ver": proto_ver,
        "rule_version": rule_version,
        "token": token,
    }
