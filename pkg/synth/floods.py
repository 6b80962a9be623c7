from typing import List

from dnp3.constants import FunctionCode
from pipeline.capture import CaptureRecord

from .attacks import attacker_session, injection_slot
from .benign import BenignSession, request_octets
from .constants import CLASS_POLL, FloodKind
from .exceptions import UnknownScenario
from .scenario import ScenarioConfig, USEC_PER_SEC
from .session import HANDSHAKE_STEP_US, merge_records


def _spacing(config: ScenarioConfig) -> int:
    """Gap between flood packets so that all ``flood_count`` land inside ``flood_seconds``."""
    return max(1, int(config.flood_seconds * USEC_PER_SEC) // config.flood_count)


def dnp3_flood(config: ScenarioConfig, start: int) -> List[CaptureRecord]:
    session = attacker_session(config)
    records = session.handshake(start)
    at = start + 3 * HANDSHAKE_STEP_US
    step = _spacing(config)
    for index in range(config.flood_count):
        octets = request_octets(config, FunctionCode.READ, CLASS_POLL, index)
        records.append(session.client_send(at + index * step, octets))
    return records


def syn_flood(config: ScenarioConfig, start: int) -> List[CaptureRecord]:
    step = _spacing(config)
    records = []
    for index in range(config.flood_count):
        session = attacker_session(config, port_offset=index)
        records.append(session.syn(start + index * step))
    return records


def port_scan(config: ScenarioConfig, start: int) -> List[CaptureRecord]:
    step = _spacing(config)
    records = []
    for index in range(config.flood_count):
        session = attacker_session(config)
        session.server_port = index + 1
        records.append(session.syn(start + index * step))
    return records


FLOODS = {
    FloodKind.DNP3_FLOOD: dnp3_flood,
    FloodKind.SYN_FLOOD: syn_flood,
    FloodKind.PORT_SCAN: port_scan,
}


def synth_flood(kind: str, config: ScenarioConfig) -> List[CaptureRecord]:
    """
    Flood traffic from the attacker on top of benign polling.

    dnp3_flood sends ``flood_count`` Read requests over the attacker's own
    session inside ``flood_seconds``; syn_flood sends that many SYNs from
    distinct source ports; port_scan probes that many distinct ports.
    """
    if kind not in FLOODS:
        raise UnknownScenario(kind)
    background = BenignSession(config)
    background.open()
    for cycle in range(config.count):
        background.poll(cycle)
    background.close()
    return merge_records(background.records, FLOODS[kind](config, injection_slot(config)))
