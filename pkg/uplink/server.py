"""
Master side of the sensor uplink.

One thread per sensor connection. The connection starts with a hello,
then carries alerts (each answered with an ack holding the sensor's last
contiguous seq), rule acks and pings. Between reads the handler offers
the sensor any pending rule push. Storage and push bookkeeping live in a
MasterBackend so this module stays free of any database.
"""
from typing import Any, Dict, Mapping, Optional, Protocol, Tuple
import logging
import socketserver
import threading
import time

from .channel import LineChannel
from .constants import POLL_INTERVAL, PROTOCOL_VERSION, MessageType
from .exceptions import (
    ConnectionClosed,
    HandshakeMismatch,
    MalformedMessage,
    UplinkError,
)
from .messages import AlertRecord, RulePush, alert_from_message, decode_message
from .tokens import verify_token

logger = logging.getLogger(__name__)


class MasterBackend(Protocol):
    def register(self, sensor_id: str, rule_version: int, address: str) -> int:
        """Record a (re)connect; return the sensor's last contiguous seq."""

    def ingest(self, record: AlertRecord) -> Tuple[bool, int]:
        """Store once; return (newly stored, last contiguous seq)."""

    def pending_push(self, sensor_id: str) -> Optional[RulePush]:
        ...

    def record_rule_ack(self, sensor_id: str, version: int, status: str) -> None:
        ...

    def record_ping(self, sensor_id: str, counters: Mapping[str, Any]) -> None:
        ...

    def disconnected(self, sensor_id: str) -> None:
        ...


def now_us() -> int:
    return time.time_ns() // 1000


class SensorConnectionHandler(socketserver.BaseRequestHandler):
    server: "MasterServer"

    def handle(self) -> None:
        channel = LineChannel(self.request)
        peer = f"{self.client_address[0]}:{self.client_address[1]}"
        try:
            sensor_id = self._handshake(channel, peer)
        except UplinkError as e:
            logger.warning(f"Rejected connection from {peer}: {e.message}")
            try:
                channel.send({"type": MessageType.ERROR, "message": e.message})
            except ConnectionClosed:
                pass
            return

        logger.info(f"Sensor {sensor_id} connected from {peer}")
        try:
            self._serve(channel, sensor_id)
        except ConnectionClosed as e:
            logger.info(f"Sensor {sensor_id} disconnected: {e.message}")
        finally:
            self.server.backend.disconnected(sensor_id)

    def _handshake(self, channel: LineChannel, peer: str) -> str:
        message = decode_message(channel.read_line(self.server.handshake_timeout))
        if message["type"] != MessageType.HELLO:
            raise MalformedMessage(f"expected hello, got {message['type']}")
        if message.get("proto_ver") != PROTOCOL_VERSION:
            raise HandshakeMismatch(PROTOCOL_VERSION, message.get("proto_ver"))
        sensor_id = message.get("sensor_id")
        if not isinstance(sensor_id, str) or not sensor_id:
            raise MalformedMessage("hello without sensor_id")
        if self.server.secret:
            verify_token(str(message.get("token", "")), self.server.secret, subject=sensor_id)
        rule_version = message.get("rule_version", 0)
        last_seq = self.server.backend.register(sensor_id, rule_version if isinstance(rule_version, int) else 0, peer)
        channel.send({"type": MessageType.HELLO_ACK, "proto_ver": PROTOCOL_VERSION, "seq": last_seq})
        return sensor_id

    def _serve(self, channel: LineChannel, sensor_id: str) -> None:
        offered: Optional[int] = None
        while not self.server.stopping.is_set():
            try:
                lines = channel.read_lines(self.server.poll_interval)
            except MalformedMessage as e:
                self.server.count_malformed(sensor_id, e)
                lines = []
            for line in lines:
                self._dispatch(channel, sensor_id, line)

            push = self.server.backend.pending_push(sensor_id)
            if push is not None and push.version != offered:
                channel.send(push.to_message())
                offered = push.version
                logger.info(f"Offered rule set v{push.version} to sensor {sensor_id}")

    def _dispatch(self, channel: LineChannel, sensor_id: str, line: bytes) -> None:
        try:
            message = decode_message(line)
            kind = message["type"]
            if kind == MessageType.ALERT:
                record = alert_from_message(message)
                if record.sensor_id != sensor_id:
                    raise MalformedMessage(f"alert for {record.sensor_id} on connection of {sensor_id}")
                _, contiguous = self.server.backend.ingest(record.with_received_at(now_us()))
                channel.send({"type": MessageType.ACK, "seq": contiguous, "acked": record.seq})
            elif kind == MessageType.RULE_ACK:
                version = message.get("version")
                if not isinstance(version, int):
                    raise MalformedMessage("rule_ack without version")
                self.server.backend.record_rule_ack(sensor_id, version, str(message.get("status", "")))
            elif kind == MessageType.PING:
                counters = message.get("counters")
                self.server.backend.record_ping(sensor_id, counters if isinstance(counters, dict) else {})
            else:
                logger.warning(f"Ignoring {kind} from sensor {sensor_id}")
        except MalformedMessage as e:
            self.server.count_malformed(sensor_id, e)


class MasterServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        address: Tuple[str, int],
        backend: MasterBackend,
        secret: str = "",
        poll_interval: float = POLL_INTERVAL,
        handshake_timeout: float = 5.0,
    ):
        self.backend = backend
        self.secret = secret
        self.poll_interval = poll_interval
        self.handshake_timeout = handshake_timeout
        self.stopping = threading.Event()
        self._malformed: Dict[str, int] = {}
        self._lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None
        super().__init__(address, SensorConnectionHandler)

    @property
    def port(self) -> int:
        return self.server_address[1]

    def count_malformed(self, sensor_id: str, error: UplinkError) -> None:
        with self._lock:
            self._malformed[sensor_id] = self._malformed.get(sensor_id, 0) + 1
        logger.warning(f"Skipped line from sensor {sensor_id}: {error.message}")

    def malformed_count(self, sensor_id: str) -> int:
        with self._lock:
            return self._malformed.get(sensor_id, 0)

    def start(self) -> threading.Thread:
        """Serve from a background thread."""
        self._thread = threading.Thread(target=self.serve_forever, name="dnp3ids-master", daemon=True)
        self._thread.start()
        logger.info(f"Master listening on {self.server_address[0]}:{self.port}")
        return self._thread

    def stop(self) -> None:
        self.stopping.set()
        if self._thread is not None:
            self.shutdown()
            self._thread.join()
        self.server_close()
