"""
Sensor side of the uplink.

Alerts are numbered and queued in a bounded spool; a background thread
keeps one connection to the master, sends what the master has not yet
acknowledged and drops records as acks arrive. When the spool is full
the oldest record is dropped and counted, which the master sees as a gap
in the sensor's seqs.
"""
from collections import deque
from typing import Callable, Deque, Dict, Optional, Tuple
import logging
import socket
import threading
import time

from rules import Alert

from .channel import LineChannel
from .constants import (
    DEFAULT_SPOOL_SIZE,
    PING_INTERVAL,
    POLL_INTERVAL,
    RECONNECT_DELAY,
    MessageType,
    RuleAckStatus,
)
from .exceptions import ConnectionClosed, MalformedMessage, UplinkError
from .messages import AlertRecord, RulePush, decode_message, encode_alert, hello_message

logger = logging.getLogger(__name__)

RulePushHandler = Callable[[RulePush], str]


class AlertSpool:
    """Bounded FIFO of unacknowledged records, oldest dropped on overflow."""

    def __init__(self, size: int = DEFAULT_SPOOL_SIZE):
        if size < 1:
            raise ValueError(f"spool size must be >= 1, got {size}")
        self._records: Deque[AlertRecord] = deque()
        self.size = size
        self.dropped = 0
        self._lock = threading.Lock()
        self.changed = threading.Condition(self._lock)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def append(self, record: AlertRecord) -> None:
        with self._lock:
            if len(self._records) >= self.size:
                lost = self._records.popleft()
                self.dropped += 1
                logger.warning(f"Spool full, dropped alert seq {lost.seq}")
            self._records.append(record)
            self.changed.notify_all()

    def after(self, seq: int) -> Tuple[AlertRecord, ...]:
        with self._lock:
            return tuple(record for record in self._records if record.seq > seq)

    def acknowledge(self, contiguous: int, acked: Optional[int] = None) -> None:
        with self._lock:
            self._records = deque(
                record for record in self._records
                if record.seq > contiguous and record.seq != acked
            )
            self.changed.notify_all()

    def wait_empty(self, timeout: float) -> bool:
        with self._lock:
            return self.changed.wait_for(lambda: not self._records, timeout)


class SensorUplink:
    def __init__(
        self,
        sensor_id: str,
        address: Tuple[str, int],
        token: str = "",
        spool_size: int = DEFAULT_SPOOL_SIZE,
        rule_version: Callable[[], int] = lambda: 0,
        on_rule_push: Optional[RulePushHandler] = None,
        poll_interval: float = POLL_INTERVAL,
        reconnect_delay: float = RECONNECT_DELAY,
        ping_interval: float = PING_INTERVAL,
    ):
        self.sensor_id = sensor_id
        self.address = address
        self.token = token
        self.spool = AlertSpool(spool_size)
        self.rule_version = rule_version
        self.on_rule_push = on_rule_push
        self.poll_interval = poll_interval
        self.reconnect_delay = reconnect_delay
        self.ping_interval = ping_interval
        self.connected = threading.Event()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._seq_lock = threading.Lock()
        self._next_seq = 1
        self.emitted = 0

    def enqueue(self, alert: Alert) -> AlertRecord:
        with self._seq_lock:
            record = AlertRecord.from_alert(self.sensor_id, self._next_seq, alert)
            self._next_seq += 1
            self.emitted += 1
        self.spool.append(record)
        return record

    def counters(self) -> Dict[str, int]:
        return {"emitted": self.emitted, "spooled": len(self.spool), "dropped": self.spool.dropped}

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run, name=f"uplink-{self.sensor_id}", daemon=True)
        self._thread.start()

    def stop(self, flush_timeout: float = 0.0) -> None:
        if flush_timeout:
            self.flush(flush_timeout)
        self._stop.set()
        if self._thread is not None:
            self._thread.join()

    def flush(self, timeout: float) -> bool:
        """Wait until the master has acknowledged every spooled alert."""
        return self.spool.wait_empty(timeout)

    def run(self) -> None:
        while not self._stop.is_set():
            try:
                sock = socket.create_connection(self.address, timeout=self.reconnect_delay)
            except OSError as e:
                logger.warning(f"Cannot reach master at {self.address[0]}:{self.address[1]}: {e}")
                self._stop.wait(self.reconnect_delay)
                continue
            channel = LineChannel(sock)
            try:
                self._session(channel)
            except UplinkError as e:
                logger.warning(f"Uplink session ended: {e.message}")
            finally:
                self.connected.clear()
                channel.close()
            self._stop.wait(self.reconnect_delay)

    def _session(self, channel: LineChannel) -> None:
        channel.send(hello_message(self.sensor_id, self.rule_version(), self.token))
        reply = decode_message(channel.read_line(self.reconnect_delay * 5))
        if reply["type"] == MessageType.ERROR:
            raise UplinkError(f"Master refused hello: {reply.get('message')}")
        if reply["type"] != MessageType.HELLO_ACK or not isinstance(reply.get("seq"), int):
            raise MalformedMessage(f"expected hello_ack, got {reply['type']}")

        # the master already holds everything up to its contiguous seq
        self.spool.acknowledge(reply["seq"])
        sent = reply["seq"]
        self.connected.set()
        logger.info(f"Sensor {self.sensor_id} connected to master, resuming after seq {sent}")
        next_ping = time.monotonic() + self.ping_interval

        while not self._stop.is_set():
            for record in self.spool.after(sent):
                channel.send_raw(encode_alert(record))
                sent = record.seq
            for line in channel.read_lines(self.poll_interval):
                self._dispatch(channel, line)
            if time.monotonic() >= next_ping:
                channel.send({"type": MessageType.PING, "sensor_id": self.sensor_id, "counters": self.counters()})
                next_ping = time.monotonic() + self.ping_interval

    def _dispatch(self, channel: LineChannel, line: bytes) -> None:
        try:
            message = decode_message(line)
        except MalformedMessage as e:
            logger.warning(f"Skipped line from master: {e.message}")
            return
        kind = message["type"]
        if kind == MessageType.ACK and isinstance(message.get("seq"), int):
            self.spool.acknowledge(message["seq"], message.get("acked"))
        elif kind == MessageType.RULE_PUSH:
            self._apply_push(channel, message)
        elif kind == MessageType.ERROR:
            raise ConnectionClosed(f"Master error: {message.get('message')}")
        else:
            logger.debug(f"Ignoring {kind} from master")

    def _apply_push(self, channel: LineChannel, message: Dict) -> None:
        try:
            push = RulePush.from_message(message)
        except MalformedMessage as e:
            logger.warning(f"Bad rule push: {e.message}")
            return
        status = self.on_rule_push(push) if self.on_rule_push is not None else RuleAckStatus.COMPILE_FAILED
        channel.send({
            "type": MessageType.RULE_ACK,
            "version": push.version,
            "status": status,
            "compile_ok": status in (RuleAckStatus.APPLIED, RuleAckStatus.STALE),
            "rule_version": self.rule_version(),
        })
