from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set, Tuple, Union
import logging

from rules import Rule, parse_rule, parse_ruleset, render_rule

from .constants import FIRST_GENERATED_SID, PATTERN_METADATA_KEY, PatternKind
from .generator import GeneratedRule

logger = logging.getLogger(__name__)


class ChangeAction:
    ADD = "ADD"
    SKIP = "SKIP"


@dataclass
class MergeResult:
    text: str
    changelog: List[str] = field(default_factory=list)
    added: int = 0
    skipped: int = 0

    @property
    def changelog_text(self) -> str:
        return "".join(line + "\n" for line in self.changelog)


def priority_class(rule: Rule) -> Optional[int]:
    """
    Pattern kind of a rule: its ``pattern-kind`` metadata when present,
    otherwise inferred from its options. Preproc bindings and plain header
    rules have no class.
    """
    for key, value in rule.metadata:
        if key == PATTERN_METADATA_KEY and value.isdigit() and int(value) in PatternKind.ALL:
            return int(value)
    if rule.preproc:
        return None
    if rule.threshold is not None:
        return PatternKind.RATE
    if rule.flow is not None:
        return PatternKind.FLOW_DIRECTION
    if any(option.offset == 12 for option in rule.contents):
        return PatternKind.CRITICAL_COMMAND
    return None


def _rank(kind: Optional[int]) -> Optional[int]:
    return None if kind is None else PatternKind.PRIORITY.index(kind)


def _insert_at(lines: List[Tuple[str, Optional[Rule]]], rank: Optional[int]) -> int:
    if rank is None:
        return len(lines)
    for index, (_, rule) in enumerate(lines):
        if rule is None:
            continue
        existing = _rank(priority_class(rule))
        if existing is not None and existing > rank:
            return index
    return len(lines)


def merge_repository(repo: str, new: Sequence[Union[GeneratedRule, Rule]]) -> MergeResult:
    """
    Merge rules into repository text.

    Rules already present up to msg, sid, rev and metadata are skipped. New
    rules go in front of the first rule of a lower priority class, so
    retained lines keep their relative order. A new rule whose sid is taken
    is renumbered above every sid in use.

    Raises:
        RuleSetCompileError: the repository does not parse
    """
    parsed = dict(parse_ruleset(repo))
    lines: List[Tuple[str, Optional[Rule]]] = [
        (line, parsed.get(line_no)) for line_no, line in enumerate(repo.splitlines(), start=1)
    ]
    present = {rule.detection_key(): rule for _, rule in lines if rule is not None}
    used: Set[Tuple[int, int]] = {rule.rule_id for _, rule in lines if rule is not None}
    result = MergeResult(text="")

    for item in new:
        rule = item.rule if isinstance(item, GeneratedRule) else item
        key = rule.detection_key()
        if key in present:
            result.skipped += 1
            result.changelog.append(f"{ChangeAction.SKIP} {rule.sid} duplicate of sid {present[key].sid}")
            continue

        reason = "new rule"
        if rule.rule_id in used:
            taken = max([sid for gid, sid in used if gid == rule.gid] + [FIRST_GENERATED_SID - 1])
            reason = f"new rule, renumbered from {rule.sid}"
            rule = parse_rule(render_rule(rule.with_sid(taken + 1)))

        kind = priority_class(rule)
        lines.insert(_insert_at(lines, _rank(kind)), (render_rule(rule), rule))
        present[key] = rule
        used.add(rule.rule_id)
        result.added += 1
        label = f"kind {kind}" if kind is not None else "unclassified"
        result.changelog.append(f"{ChangeAction.ADD} {rule.sid} {reason} ({label})")

    result.text = "".join(line + "\n" for line, _ in lines)
    logger.info(f"Merged repository: {result.added} added, {result.skipped} skipped")
    return result
