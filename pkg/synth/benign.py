import random
from typing import List, Tuple

from dnp3 import build_frame, encode_frame
from dnp3.constants import FunctionCode
from pipeline.capture import CaptureRecord

from .constants import ANALOG_RESPONSE, CLASS_POLL, CROB, OPERATE_DELAY_US, RESPONSE_DELAY_US
from .scenario import ScenarioConfig
from .session import TcpSession


def session_isns(config: ScenarioConfig, salt: str) -> Tuple[int, int]:
    rng = random.Random(f"{config.seed}:{salt}")
    return rng.getrandbits(32), rng.getrandbits(32)


def master_session(config: ScenarioConfig) -> TcpSession:
    client_isn, server_isn = session_isns(config, "master")
    return TcpSession(
        config.master_ip, config.master_port,
        config.outstation_ip, config.outstation_port,
        client_isn, server_isn,
    )


def request_octets(config: ScenarioConfig, function_code: int, payload: bytes, seq: int, destination=None) -> bytes:
    frame = build_frame(
        config.outstation_address if destination is None else destination,
        config.master_address,
        function_code,
        payload,
        transport_seq=seq,
        app_seq=seq,
    )
    return encode_frame(frame)


def response_octets(config: ScenarioConfig, payload: bytes, seq: int) -> bytes:
    frame = build_frame(
        config.master_address,
        config.outstation_address,
        FunctionCode.RESPONSE,
        payload,
        request=False,
        transport_seq=seq,
        app_seq=seq,
    )
    return encode_frame(frame)


class BenignSession:
    """The master's polling session; callers may add exchanges between polls."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.session = master_session(config)
        self.records: List[CaptureRecord] = []
        self.sequence = 0
        self.response_delay = min(RESPONSE_DELAY_US, config.interval_us // 4)

    def exchange(self, ts: int, function_code: int, payload: bytes, response: bytes = ANALOG_RESPONSE) -> Tuple[CaptureRecord, CaptureRecord]:
        request = self.session.client_send(ts, request_octets(self.config, function_code, payload, self.sequence))
        reply = self.session.server_send(ts + self.response_delay, response_octets(self.config, response, self.sequence))
        self.sequence += 1
        self.records.extend([request, reply])
        return request, reply

    def select_operate(self, ts: int, gap: int = OPERATE_DELAY_US) -> Tuple[CaptureRecord, CaptureRecord]:
        select, _ = self.exchange(ts, FunctionCode.SELECT, CROB, response=CROB)
        operate, _ = self.exchange(ts + gap, FunctionCode.OPERATE, CROB, response=CROB)
        return select, operate

    def open(self) -> None:
        self.records.extend(self.session.handshake(self.config.start_time))

    def poll(self, cycle: int) -> None:
        self.exchange(self.config.poll_time(cycle), FunctionCode.READ, CLASS_POLL)

    def close(self) -> None:
        end = self.config.poll_time(self.config.count) + self.config.interval_us
        self.records.extend(self.session.teardown(end))


def synth_benign(config: ScenarioConfig) -> List[CaptureRecord]:
    """
    Master/outstation polling: handshake, ``count`` Read polls answered by
    the outstation at ``rate`` Hz, then FIN teardown.
    """
    session = BenignSession(config)
    session.open()
    for cycle in range(config.count):
        session.poll(cycle)
    session.close()
    return session.records
