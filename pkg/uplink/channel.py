from typing import Any, List, Mapping
import logging
import socket
import threading

from .constants import MAX_LINE_BYTES
from .exceptions import ConnectionClosed, MalformedMessage
from .messages import encode_message

logger = logging.getLogger(__name__)


class LineChannel:
    """
    Newline-framed messages over a connected socket. Reads poll with a
    timeout so the owner can interleave its own work between lines.
    """

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._buffer = bytearray()
        self._send_lock = threading.Lock()

    def send(self, message: Mapping[str, Any]) -> None:
        self.send_raw(encode_message(message))

    def send_raw(self, line: bytes) -> None:
        with self._send_lock:
            try:
                self.sock.sendall(line)
            except OSError as e:
                raise ConnectionClosed(f"Send failed: {e}")

    def read_lines(self, timeout: float) -> List[bytes]:
        """
        Complete lines received within ``timeout`` seconds, possibly none.

        Raises:
            ConnectionClosed: end of stream or socket error
            MalformedMessage: a line grew past the size limit
        """
        lines = self._take_lines()
        if lines:
            return lines
        self.sock.settimeout(timeout)
        try:
            chunk = self.sock.recv(65536)
        except socket.timeout:
            return []
        except OSError as e:
            raise ConnectionClosed(f"Receive failed: {e}")
        if not chunk:
            raise ConnectionClosed()
        self._buffer.extend(chunk)
        lines = self._take_lines()
        if not lines and len(self._buffer) > MAX_LINE_BYTES:
            self._buffer.clear()
            raise MalformedMessage("line too long")
        return lines

    def read_line(self, timeout: float) -> bytes:
        """One line, waiting at most ``timeout`` seconds in total."""
        deadline_reads = max(1, int(timeout / 0.05))
        for _ in range(deadline_reads):
            lines = self.read_lines(0.05)
            if lines:
                head, rest = lines[0], lines[1:]
                self._buffer[:0] = b"".join(line + b"\n" for line in rest)
                return head
        raise ConnectionClosed(f"No message within {timeout}s")

    def _take_lines(self) -> List[bytes]:
        if b"\n" not in self._buffer:
            return []
        *lines, rest = bytes(self._buffer).split(b"\n")
        self._buffer = bytearray(rest)
        return [line for line in lines if line.strip()]

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError as e:
            logger.debug(f"Closing channel: {e}")
