from .addresses import load_variables, parse_address, parse_port, parse_variable_binding, parse_variables, render_variables
from .engine import Alert, Evaluation, evaluate, evaluate_packet
from .model import Rule, RuleHeader
from .parser import parse_rule, render_rule
from .ruleset import CompiledRuleSet, RuleSetHolder, compile_rules, compile_ruleset, load_ruleset, parse_ruleset
from .threshold import ThresholdState

__all__ = [
    'load_variables',
    'parse_address',
    'parse_port',
    'parse_variable_binding',
    'parse_variables',
    'render_variables',
    'Alert',
    'Evaluation',
    'evaluate',
    'evaluate_packet',
    'Rule',
    'RuleHeader',
    'parse_rule',
    'render_rule',
    'CompiledRuleSet',
    'RuleSetHolder',
    'compile_rules',
    'compile_ruleset',
    'load_ruleset',
    'parse_ruleset',
    'ThresholdState',
]
