from typing import List

from pipeline.capture import CaptureRecord

from .attacks import synth_attack, synth_attack_parts
from .benign import synth_benign
from .constants import BENIGN, ORDERING, AttackKind, CrcSite, FloodKind
from .corrupt import corrupt_crc, dnp3_record_indexes
from .exceptions import IndexNotDnp3, SynthError, UnknownScenario
from .floods import synth_flood
from .ordering import synth_ordering
from .scenario import ScenarioConfig

SCENARIOS = (BENIGN, ORDERING) + AttackKind.ALL + FloodKind.ALL


def synth_scenario(kind: str, config: ScenarioConfig) -> List[CaptureRecord]:
    if kind == BENIGN:
        return synth_benign(config)
    if kind == ORDERING:
        return synth_ordering(config)
    if kind in AttackKind.ALL:
        return synth_attack(kind, config)
    if kind in FloodKind.ALL:
        return synth_flood(kind, config)
    raise UnknownScenario(kind)


__all__ = [
    'SCENARIOS',
    'synth_scenario',
    'synth_attack',
    'synth_attack_parts',
    'synth_benign',
    'synth_flood',
    'synth_ordering',
    'corrupt_crc',
    'dnp3_record_indexes',
    'AttackKind',
    'CrcSite',
    'FloodKind',
    'IndexNotDnp3',
    'SynthError',
    'UnknownScenario',
    'ScenarioConfig',
]
