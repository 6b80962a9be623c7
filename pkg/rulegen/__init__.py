from .baseline import BaselineProfile, TimingStats, learn_baseline
from .constants import FIRST_GENERATED_SID, PatternKind, RuleVariable
from .exceptions import NoDnp3Traffic, RulegenError
from .generator import (
    GeneratedRule,
    GeneratorConfig,
    Provenance,
    generate_ruleset,
    generated_variables,
    render_generated,
)
from .patterns import KNOWN, RateTracker, TrafficPattern, classify_observation
from .repository import MergeResult, merge_repository, priority_class

__all__ = [
    'BaselineProfile',
    'TimingStats',
    'learn_baseline',
    'FIRST_GENERATED_SID',
    'PatternKind',
    'RuleVariable',
    'NoDnp3Traffic',
    'RulegenError',
    'GeneratedRule',
    'GeneratorConfig',
    'Provenance',
    'generate_ruleset',
    'generated_variables',
    'render_generated',
    'KNOWN',
    'RateTracker',
    'TrafficPattern',
    'classify_observation',
    'MergeResult',
    'merge_repository',
    'priority_class',
]
