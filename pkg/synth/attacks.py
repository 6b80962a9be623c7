"""
Attack captures: benign polling with attacker traffic injected after the
configured poll cycle.
"""
from typing import Callable, List, Tuple

from dnp3.constants import FunctionCode
from pipeline.capture import CaptureRecord

from .benign import BenignSession, request_octets, session_isns
from .constants import CROB, UNSOLICITED_CLASSES, AttackKind
from .exceptions import UnknownScenario
from .scenario import ScenarioConfig
from .session import TcpSession, merge_records, HANDSHAKE_STEP_US

BROADCAST_ADDRESS = 0xFFFF
FRAME_STEP_US = 1_000

# (function code, object payload, link destination override)
ATTACK_FRAMES = {
    AttackKind.DIRECT_OPERATE: [(FunctionCode.DIRECT_OPERATE, CROB, None)],
    AttackKind.BROADCAST_REQUEST: [(FunctionCode.OPERATE, CROB, BROADCAST_ADDRESS)],
    AttackKind.DISABLE_UNSOLICITED: [(FunctionCode.DISABLE_UNSOLICITED, UNSOLICITED_CLASSES, None)],
    AttackKind.STOP_APPLICATION: [(FunctionCode.STOP_APPLICATION, b"", None)],
    AttackKind.COLD_RESTART: [(FunctionCode.COLD_RESTART, b"", None)],
}


def attacker_session(config: ScenarioConfig, port_offset: int = 0) -> TcpSession:
    client_isn, server_isn = session_isns(config, f"attacker:{port_offset}")
    return TcpSession(
        config.attacker_ip, config.attacker_port + port_offset,
        config.outstation_ip, config.outstation_port,
        client_isn, server_isn,
    )


def attacker_exchange(config: ScenarioConfig, ts: int, frames: List[bytes], step_us: int = FRAME_STEP_US) -> List[CaptureRecord]:
    """The attacker's own session: handshake, one segment per frame, teardown."""
    session = attacker_session(config)
    records = session.handshake(ts)
    at = ts + 3 * HANDSHAKE_STEP_US
    for octets in frames:
        at += step_us
        records.append(session.client_send(at, octets))
    records.extend(session.teardown(at + step_us))
    return records


def injection_slot(config: ScenarioConfig) -> int:
    return config.poll_time(config.injection_cycle) + config.interval_us // 4


def _replay(config: ScenarioConfig, background: BenignSession, slot: int) -> List[CaptureRecord]:
    select, operate = background.select_operate(slot, gap=config.interval_us // 8)
    replay_at = slot + config.interval_us // 2
    if config.spoof_source:
        # the sniffed segments re-sent verbatim into the master's session
        return [
            CaptureRecord(timestamp=replay_at, data=select.data),
            CaptureRecord(timestamp=replay_at + FRAME_STEP_US, data=operate.data),
        ]
    frames = [
        request_octets(config, FunctionCode.SELECT, CROB, 0),
        request_octets(config, FunctionCode.OPERATE, CROB, 1),
    ]
    return attacker_exchange(config, replay_at, frames)


def synth_attack_parts(kind: str, config: ScenarioConfig) -> Tuple[List[CaptureRecord], List[CaptureRecord]]:
    """Return (background, injected) record lists for one attack kind."""
    if kind not in AttackKind.ALL:
        raise UnknownScenario(kind)
    background = BenignSession(config)
    background.open()
    slot = injection_slot(config)
    injected: List[CaptureRecord] = []

    for cycle in range(config.count + 1):
        if cycle < config.count:
            background.poll(cycle)
        if cycle != config.injection_cycle:
            continue
        if kind == AttackKind.SELECT_OPERATE_REPLAY:
            injected = _replay(config, background, slot)
        else:
            frames = [
                request_octets(config, code, payload, index, destination=destination)
                for index, (code, payload, destination) in enumerate(ATTACK_FRAMES[kind])
            ]
            injected = attacker_exchange(config, slot, frames)

    background.close()
    return background.records, injected


def synth_attack(kind: str, config: ScenarioConfig) -> List[CaptureRecord]:
    """
    Build an attack capture embedded in benign polling.

    Raises:
        UnknownScenario: kind is not one of the six attacks
    """
    background, injected = synth_attack_parts(kind, config)
    return merge_records(background, injected)
