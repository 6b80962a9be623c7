from dataclasses import dataclass, field, replace
from hashlib import sha256
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple
import logging
import threading

from .addresses import VariableTable
from .exceptions import DuplicateSid, RuleError, RuleSetCompileError
from .model import Rule
from .parser import parse_rule, render_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompiledRuleSet:
    rules: Tuple[Rule, ...]
    variables: Mapping = field(default_factory=dict)
    version: int = 0
    text: str = ""

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    @property
    def digest(self) -> str:
        return sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def preproc_bindings(self) -> Dict[Tuple[int, int], Rule]:
        return {rule.rule_id: rule for rule in self.rules if rule.preproc}

    @property
    def threshold_horizon(self) -> int:
        """Longest threshold window in seconds; 0 when no rule counts events."""
        return max((rule.threshold.seconds for rule in self.rules if rule.threshold is not None), default=0)

    def with_version(self, version: int) -> "CompiledRuleSet":
        return replace(self, version=version)

    def render(self) -> str:
        return "\n".join(render_rule(rule) for rule in self.rules) + ("\n" if self.rules else "")


def _resolve(rule: Rule, variables: VariableTable) -> Rule:
    header = replace(
        rule.header,
        src=rule.header.src.resolve(variables),
        dst=rule.header.dst.resolve(variables),
    )
    return replace(rule, header=header)


def compile_rules(rules: Iterable[Rule], variables: VariableTable, version: int = 0, text: str = "") -> CompiledRuleSet:
    """
    Resolve variables and assign positions for already parsed rules.

    Raises:
        UnresolvedVariable: a header references an unbound variable
        DuplicateSid: two rules share a (gid, sid) pair
    """
    seen = set()
    compiled: List[Rule] = []
    for position, rule in enumerate(rules):
        if rule.rule_id in seen:
            raise DuplicateSid(*rule.rule_id)
        seen.add(rule.rule_id)
        compiled.append(_resolve(rule, variables).with_position(position))
    if not text:
        text = "\n".join(render_rule(rule) for rule in compiled)
    return CompiledRuleSet(rules=tuple(compiled), variables=dict(variables), version=version, text=text)


def parse_ruleset(text: str) -> List[Tuple[int, Rule]]:
    """Parse every rule line, aggregating errors with their 1-based line numbers."""
    parsed: List[Tuple[int, Rule]] = []
    errors: List[Tuple[int, RuleError]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        try:
            rule = parse_rule(line)
        except RuleError as e:
            errors.append((line_no, e))
            continue
        if rule is not None:
            parsed.append((line_no, rule))
    if errors:
        raise RuleSetCompileError(errors)
    return parsed


def compile_ruleset(text: str, variables: VariableTable, version: int = 0) -> CompiledRuleSet:
    """
    Compile rule file text into an ordered rule set.

    Args:
        text: rule file contents, one rule per line
        variables: variable name to network list
        version: version number assigned by the caller

    Returns:
        CompiledRuleSet with positions 0..n-1 in file order

    Raises:
        RuleSetCompileError: one or more lines failed to parse
        UnresolvedVariable: a header references an unbound variable
        DuplicateSid: two rules share a (gid, sid) pair
    """
    parsed = parse_ruleset(text)
    ruleset = compile_rules((rule for _, rule in parsed), variables, version=version, text=text)
    logger.debug(f"Compiled {len(ruleset)} rules at version {version}")
    return ruleset


def load_ruleset(path: str, variables: VariableTable, version: int = 0) -> CompiledRuleSet:
    with open(path, encoding="utf-8") as f:
        return compile_ruleset(f.read(), variables, version=version)


class RuleSetHolder:
    """Shared reference to the active rule set; swaps are atomic."""

    def __init__(self, ruleset: CompiledRuleSet):
        self._lock = threading.Lock()
        self._ruleset = ruleset

    @property
    def current(self) -> CompiledRuleSet:
        with self._lock:
            return self._ruleset

    @property
    def version(self) -> int:
        return self.current.version

    def swap(self, ruleset: CompiledRuleSet) -> CompiledRuleSet:
        with self._lock:
            previous, self._ruleset = self._ruleset, ruleset
        logger.info(f"Rule set swapped from version {previous.version} to {ruleset.version}")
        return previous
