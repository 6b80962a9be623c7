from dataclasses import dataclass
from typing import Any, Optional

from .constants import DETECTOR_MESSAGES, GID


@dataclass(frozen=True)
class PreprocAlert:
    gid: int
    sid: int
    msg: str
    packet: Optional[Any] = None

    @classmethod
    def for_sid(cls, sid: int, packet: Optional[Any] = None) -> "PreprocAlert":
        return cls(gid=GID, sid=sid, msg=DETECTOR_MESSAGES[sid], packet=packet)

    @property
    def rule_id(self):
        return (self.gid, self.sid)
