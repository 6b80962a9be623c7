"""
Rule text parsing and rendering.

A rule is one line: ``action proto src sport dir dst dport (opt; opt; ...)``.
Quoted content made only of whitespace separated hex pairs decodes to raw
octets (``" 05 64 "``). ``|05 64|`` segments are accepted as well; anything
else is literal ASCII.
"""
import re
from typing import List, Optional, Tuple

from .addresses import parse_address, parse_port
from .constants import (
    DEFAULT_GID,
    FlowKeyword,
    RuleAction,
    RuleDirection,
    RuleProtocol,
    ThresholdTrack,
    ThresholdType,
)
from .exceptions import MissingSid, RuleSyntaxError, UnknownOption
from .model import (
    ContentOption,
    FlowOption,
    GidOption,
    MetadataOption,
    MsgOption,
    RevOption,
    Rule,
    RuleHeader,
    RuleOption,
    SidOption,
    ThresholdOption,
)

HEX_PAIRS = re.compile(r"^\s*[0-9A-Fa-f]{2}(\s+[0-9A-Fa-f]{2})*\s*$")
# characters that can be written inside a literal content string unescaped
_LITERAL_UNSAFE = set('"\\|;')
OPTION_NAMES = ("content", "offset", "depth", "msg", "sid", "gid", "rev", "flow", "threshold", "metadata")


def _split_header(text: str, base: int) -> List[Tuple[str, int]]:
    """Whitespace split that keeps ``[a, b]`` lists together."""
    tokens, current, depth, start = [], [], 0, None
    for i, ch in enumerate(text):
        if ch.isspace() and depth == 0:
            if current:
                tokens.append(("".join(current), base + start))
                current = []
            continue
        if not current:
            start = i
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        current.append(ch)
    if current:
        tokens.append(("".join(current), base + start))
    if depth != 0:
        raise RuleSyntaxError("unbalanced '[' in rule header", base)
    return tokens


def _split_options(body: str, base: int) -> List[Tuple[str, int]]:
    """Split the option body on ``;`` outside double quotes."""
    parts, current, in_quote, escaped, start = [], [], False, False, 0
    for i, ch in enumerate(body):
        if escaped:
            current.append(ch)
            escaped = False
            continue
        if ch == "\\" and in_quote:
            current.append(ch)
            escaped = True
            continue
        if ch == '"':
            in_quote = not in_quote
        if ch == ";" and not in_quote:
            chunk = "".join(current)
            if chunk.strip():
                parts.append((chunk.strip(), base + start))
            current, start = [], i + 1
            continue
        current.append(ch)
    if in_quote:
        raise RuleSyntaxError("unterminated quoted string", base + start)
    if "".join(current).strip():
        raise RuleSyntaxError("option list must end with ';'", base + start)
    return parts


def _unquote(value: str, position: int) -> str:
    value = value.strip()
    if len(value) < 2 or not value.startswith('"') or not value.endswith('"'):
        raise RuleSyntaxError(f"expected a quoted string, got '{value}'", position)
    return re.sub(r"\\(.)", r"\1", value[1:-1])


def decode_content(text: str, position: Optional[int] = None) -> bytes:
    if "|" in text:
        segments = text.split("|")
        if len(segments) % 2 == 0:
            raise RuleSyntaxError("unbalanced '|' in content", position)
        out = bytearray()
        for index, segment in enumerate(segments):
            if index % 2 == 0:
                out += segment.encode("utf-8")
            elif segment.strip():
                if not HEX_PAIRS.match(segment):
                    raise RuleSyntaxError(f"bad hex in content '|{segment}|'", position)
                out += bytes.fromhex(segment)
        pattern = bytes(out)
    elif HEX_PAIRS.match(text):
        pattern = bytes.fromhex(text)
    else:
        pattern = text.encode("utf-8")
    if not pattern:
        raise RuleSyntaxError("content has no octets to match", position)
    return pattern


def _parse_int(name: str, value: str, position: int, minimum: int = 0) -> int:
    value = value.strip()
    if not value.isdigit() or int(value) < minimum:
        raise RuleSyntaxError(f"{name} needs an integer >= {minimum}, got '{value}'", position)
    return int(value)


def _parse_flow(value: str, position: int) -> FlowOption:
    keywords = tuple(part.strip() for part in value.split(",") if part.strip())
    if not keywords:
        raise RuleSyntaxError("flow needs at least one keyword", position)
    for keyword in keywords:
        if keyword not in FlowKeyword.ALL:
            raise RuleSyntaxError(f"unknown flow keyword '{keyword}'", position)
    if FlowKeyword.ESTABLISHED in keywords and FlowKeyword.NOT_ESTABLISHED in keywords:
        raise RuleSyntaxError("flow cannot be both established and not_established", position)
    if FlowKeyword.TO_SERVER in keywords and FlowKeyword.TO_CLIENT in keywords:
        raise RuleSyntaxError("flow cannot be both to_server and to_client", position)
    return FlowOption(keywords)


def _parse_threshold(value: str, position: int) -> ThresholdOption:
    fields = {}
    for part in value.split(","):
        words = part.split()
        if len(words) < 2:
            raise RuleSyntaxError(f"bad threshold clause '{part.strip()}'", position)
        # "track by src" and "track by_src" are both written in the wild
        fields[words[0]] = "_".join(words[1:])
    missing = [key for key in ("type", "track", "count", "seconds") if key not in fields]
    if missing:
        raise RuleSyntaxError(f"threshold is missing {', '.join(missing)}", position)
    unknown = set(fields) - {"type", "track", "count", "seconds"}
    if unknown:
        raise RuleSyntaxError(f"unknown threshold field '{sorted(unknown)[0]}'", position)
    if fields["type"] not in ThresholdType.ALL:
        raise RuleSyntaxError(f"unknown threshold type '{fields['type']}'", position)
    if fields["track"] not in ThresholdTrack.ALL:
        raise RuleSyntaxError(f"unknown threshold track '{fields['track']}'", position)
    return ThresholdOption(
        type=fields["type"],
        track=fields["track"],
        count=_parse_int("count", fields["count"], position, minimum=1),
        seconds=_parse_int("seconds", fields["seconds"], position, minimum=1),
    )


def _parse_metadata(value: str, position: int) -> MetadataOption:
    pairs = []
    for part in value.split(","):
        words = part.split(None, 1)
        if not words:
            continue
        pairs.append((words[0], words[1].strip() if len(words) > 1 else ""))
    if not pairs:
        raise RuleSyntaxError("empty metadata", position)
    return MetadataOption(tuple(pairs))


def _parse_options(chunks: List[Tuple[str, int]]) -> Tuple[RuleOption, ...]:
    options: List[RuleOption] = []
    last_content: Optional[int] = None

    for chunk, position in chunks:
        name, sep, value = chunk.partition(":")
        name = name.strip()
        if not sep:
            if name in OPTION_NAMES:
                raise RuleSyntaxError(f"option '{name}' needs a value", position)
            raise UnknownOption(name)

        if name in ("offset", "depth"):
            if last_content is None:
                raise RuleSyntaxError(f"{name} must follow a content option", position)
            content = options[last_content]
            if name == "offset":
                content = ContentOption(content.pattern, _parse_int(name, value, position), content.depth)
            else:
                depth = _parse_int(name, value, position, minimum=1)
                if depth < len(content.pattern):
                    raise RuleSyntaxError("depth is shorter than the content it bounds", position)
                content = ContentOption(content.pattern, content.offset, depth)
            options[last_content] = content
            continue

        if name == "content":
            options.append(ContentOption(decode_content(_unquote(value, position), position)))
            last_content = len(options) - 1
        elif name == "msg":
            options.append(MsgOption(_unquote(value, position)))
        elif name == "sid":
            options.append(SidOption(_parse_int(name, value, position, minimum=1)))
        elif name == "gid":
            options.append(GidOption(_parse_int(name, value, position, minimum=1)))
        elif name == "rev":
            options.append(RevOption(_parse_int(name, value, position, minimum=1)))
        elif name == "flow":
            options.append(_parse_flow(value, position))
        elif name == "threshold":
            options.append(_parse_threshold(value, position))
        elif name == "metadata":
            options.append(_parse_metadata(value, position))
        else:
            raise UnknownOption(name)

    return tuple(options)


def _validate(rule: Rule, position: int) -> None:
    kinds = [type(option) for option in rule.options]
    if SidOption not in kinds:
        raise MissingSid()
    for single in (SidOption, GidOption, MsgOption, ThresholdOption, FlowOption, RevOption):
        if kinds.count(single) > 1:
            raise RuleSyntaxError(f"option {single.__name__} given more than once", position)
    if rule.preproc and rule.gid == DEFAULT_GID:
        raise RuleSyntaxError("preproc rules must set a gid other than 1", position)


def parse_rule(text: str) -> Optional[Rule]:
    """
    Parse one rule line.

    Returns None for blank and comment lines.

    Raises:
        RuleSyntaxError: malformed header or option
        UnknownOption: option outside the supported vocabulary
        MissingSid: no sid option
    """
    line = text.strip()
    if not line or line.startswith("#"):
        return None
    lead = len(text) - len(text.lstrip())

    open_at = line.find("(")
    if open_at < 0 or not line.endswith(")"):
        raise RuleSyntaxError("rule options must be enclosed in '(...)'", lead + max(open_at, 0))

    tokens = _split_header(line[:open_at], lead)
    if len(tokens) != 7:
        raise RuleSyntaxError(f"rule header needs 7 fields, got {len(tokens)}", lead)
    (action, p0), (protocol, p1), (src, p2), (sport, p3), (direction, p4), (dst, p5), (dport, p6) = tokens

    if action not in RuleAction.ALL:
        raise RuleSyntaxError(f"unknown action '{action}'", p0)
    if protocol not in RuleProtocol.ALL:
        raise RuleSyntaxError(f"unknown protocol '{protocol}'", p1)
    if direction not in RuleDirection.ALL:
        raise RuleSyntaxError(f"unknown direction '{direction}'", p4)

    def located(parse, token, position):
        try:
            return parse(token)
        except RuleSyntaxError as e:
            raise RuleSyntaxError(e.reason, position)

    header = RuleHeader(
        action=action,
        protocol=protocol,
        src=located(parse_address, src, p2),
        src_port=located(parse_port, sport, p3),
        direction=direction,
        dst=located(parse_address, dst, p5),
        dst_port=located(parse_port, dport, p6),
    )
    body_start = lead + open_at + 1
    options = _parse_options(_split_options(line[open_at + 1:-1], body_start))
    rule = Rule(header=header, options=options, raw_text=line)
    _validate(rule, body_start)
    return rule


def _looks_literal(pattern: bytes) -> bool:
    try:
        text = pattern.decode("ascii")
    except UnicodeDecodeError:
        return False
    if not text.strip() or any(ch in _LITERAL_UNSAFE or not (" " <= ch <= "~") for ch in text):
        return False
    return not HEX_PAIRS.match(text)


def render_content(pattern: bytes) -> str:
    if _looks_literal(pattern):
        return f'"{pattern.decode("ascii")}"'
    return '" ' + " ".join(f"{octet:02X}" for octet in pattern) + ' "'


def _render_option(option: RuleOption) -> List[str]:
    if isinstance(option, ContentOption):
        parts = [f"content:{render_content(option.pattern)}"]
        if option.offset is not None:
            parts.append(f"offset:{option.offset}")
        if option.depth is not None:
            parts.append(f"depth:{option.depth}")
        return parts
    if isinstance(option, MsgOption):
        escaped = option.text.replace("\\", "\\\\").replace('"', '\\"')
        return [f'msg:"{escaped}"']
    if isinstance(option, SidOption):
        return [f"sid:{option.value}"]
    if isinstance(option, GidOption):
        return [f"gid:{option.value}"]
    if isinstance(option, RevOption):
        return [f"rev:{option.value}"]
    if isinstance(option, FlowOption):
        return [f"flow: {','.join(option.keywords)}"]
    if isinstance(option, ThresholdOption):
        return [
            f"threshold: type {option.type}, track {option.track}, "
            f"count {option.count}, seconds {option.seconds}"
        ]
    if isinstance(option, MetadataOption):
        return ["metadata: " + ", ".join(f"{key} {value}".strip() for key, value in option.pairs)]
    raise TypeError(f"cannot render option {option!r}")


def render_rule(rule: Rule) -> str:
    parts: List[str] = []
    for option in rule.options:
        parts.extend(_render_option(option))
    return f"{rule.header.render()} ({'; '.join(parts)};)"
