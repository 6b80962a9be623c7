from typing import List

from dnp3.constants import FunctionCode
from pipeline.capture import CaptureRecord

from .attacks import attacker_session
from .benign import request_octets
from .constants import CLASS_POLL, CROB
from .scenario import ScenarioConfig, USEC_PER_SEC
from .session import HANDSHAKE_STEP_US, build_icmp_echo


def synth_ordering(config: ScenarioConfig) -> List[CaptureRecord]:
    """
    One attacker capture touching the four rule categories of the ordering
    experiment, in this order: an ICMP echo, a session opened from outside
    the known hosts (its SYN is the unestablished packet), an Operate and
    then ``flood_count`` Read requests spaced to fit ``flood_seconds``.
    """
    start = config.start_time
    records = [CaptureRecord(timestamp=start, data=build_icmp_echo(config.attacker_ip, config.outstation_ip))]

    session = attacker_session(config)
    records.extend(session.handshake(start + USEC_PER_SEC))
    at = start + USEC_PER_SEC + 3 * HANDSHAKE_STEP_US
    records.append(session.client_send(at, request_octets(config, FunctionCode.OPERATE, CROB, 0)))

    step = max(1, int(config.flood_seconds * USEC_PER_SEC) // config.flood_count)
    at += USEC_PER_SEC
    for index in range(config.flood_count):
        octets = request_octets(config, FunctionCode.READ, CLASS_POLL, index + 1)
        records.append(session.client_send(at + index * step, octets))
    return records
