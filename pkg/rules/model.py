from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

from .addresses import AddressExpr, PortExpr
from .constants import DEFAULT_GID, PREPROC_METADATA, RuleAction


@dataclass(frozen=True)
class RuleHeader:
    action: str
    protocol: str
    src: AddressExpr
    src_port: PortExpr
    direction: str
    dst: AddressExpr
    dst_port: PortExpr

    def render(self) -> str:
        return " ".join([
            self.action,
            self.protocol,
            self.src.render(),
            self.src_port.render(),
            self.direction,
            self.dst.render(),
            self.dst_port.render(),
        ])


@dataclass(frozen=True)
class ContentOption:
    pattern: bytes
    offset: Optional[int] = None
    depth: Optional[int] = None


@dataclass(frozen=True)
class MsgOption:
    text: str


@dataclass(frozen=True)
class SidOption:
    value: int


@dataclass(frozen=True)
class GidOption:
    value: int


@dataclass(frozen=True)
class RevOption:
    value: int


@dataclass(frozen=True)
class FlowOption:
    keywords: Tuple[str, ...]


@dataclass(frozen=True)
class ThresholdOption:
    type: str
    track: str
    count: int
    seconds: int


@dataclass(frozen=True)
class MetadataOption:
    pairs: Tuple[Tuple[str, str], ...]


RuleOption = Union[
    ContentOption,
    MsgOption,
    SidOption,
    GidOption,
    RevOption,
    FlowOption,
    ThresholdOption,
    MetadataOption,
]

# options that only describe the rule; they are never checked against a packet
DESCRIPTIVE_OPTIONS = (MsgOption, SidOption, GidOption, RevOption, MetadataOption)


@dataclass(frozen=True)
class Rule:
    header: RuleHeader
    options: Tuple[RuleOption, ...]
    raw_text: str = ""
    position: int = -1

    def _first(self, kind):
        for option in self.options:
            if isinstance(option, kind):
                return option
        return None

    @property
    def action(self) -> str:
        return self.header.action

    @property
    def sid(self) -> int:
        option = self._first(SidOption)
        return option.value if option else 0

    @property
    def gid(self) -> int:
        option = self._first(GidOption)
        return option.value if option else DEFAULT_GID

    @property
    def msg(self) -> str:
        option = self._first(MsgOption)
        return option.text if option else f"sid:{self.sid}"

    @property
    def rule_id(self) -> Tuple[int, int]:
        return (self.gid, self.sid)

    @property
    def metadata(self) -> Tuple[Tuple[str, str], ...]:
        pairs = []
        for option in self.options:
            if isinstance(option, MetadataOption):
                pairs.extend(option.pairs)
        return tuple(pairs)

    @property
    def preproc(self) -> bool:
        return PREPROC_METADATA in self.metadata

    @property
    def contents(self) -> Tuple[ContentOption, ...]:
        return tuple(option for option in self.options if isinstance(option, ContentOption))

    @property
    def flow(self) -> Optional[FlowOption]:
        return self._first(FlowOption)

    @property
    def threshold(self) -> Optional[ThresholdOption]:
        return self._first(ThresholdOption)

    @property
    def checks(self) -> Tuple[RuleOption, ...]:
        """Options evaluated against packets, in evaluation order."""
        ordered = [
            option for option in self.options
            if not isinstance(option, DESCRIPTIVE_OPTIONS) and not isinstance(option, ThresholdOption)
        ]
        if self.threshold is not None:
            ordered.append(self.threshold)
        return tuple(ordered)

    @property
    def is_drop(self) -> bool:
        return self.action == RuleAction.DROP

    def semantic_key(self) -> tuple:
        """Identity used to compare rules across render/parse round trips."""
        return (self.header.render(), self.options)

    def detection_key(self) -> tuple:
        """Header and detection options, ignoring msg, sid, rev and metadata."""
        kept = tuple(
            option for option in self.options
            if not isinstance(option, (MsgOption, SidOption, RevOption, MetadataOption))
        )
        return (self.header.render(), self.gid, kept)

    def with_position(self, position: int) -> "Rule":
        return replace(self, position=position)

    def with_sid(self, sid: int) -> "Rule":
        options = tuple(SidOption(sid) if isinstance(option, SidOption) else option for option in self.options)
        return replace(self, options=options)
