"""
Per-rule event counting for the ``threshold`` option.

Windows are tumbling: a window opens on the first event for a
(gid, sid, track value) key and lasts ``seconds``. The next event after it
expires opens a new one.
"""
from dataclasses import dataclass
from typing import Dict, Tuple

from .constants import ThresholdType
from .model import ThresholdOption

USEC_PER_SEC = 1_000_000

ThresholdKey = Tuple[int, int, str]


@dataclass
class ThresholdWindow:
    start: int
    count: int = 0
    fired: bool = False


class ThresholdState:
    def __init__(self):
        self.windows: Dict[ThresholdKey, ThresholdWindow] = {}

    def __len__(self) -> int:
        return len(self.windows)

    def check(self, rule_id: Tuple[int, int], option: ThresholdOption, track_value: str, now: int) -> bool:
        """Record one event and tell whether it should raise an alert."""
        key = (rule_id[0], rule_id[1], track_value)
        window = self.windows.get(key)
        if window is None or now - window.start >= option.seconds * USEC_PER_SEC:
            window = ThresholdWindow(start=now)
            self.windows[key] = window
        window.count += 1

        if option.type == ThresholdType.LIMIT:
            return window.count <= option.count
        if option.type == ThresholdType.THRESHOLD:
            return window.count % option.count == 0
        if window.count >= option.count and not window.fired:
            window.fired = True
            return True
        return False

    def purge(self, now: int, max_seconds: int) -> int:
        stale = [key for key, window in self.windows.items() if now - window.start >= max_seconds * USEC_PER_SEC]
        for key in stale:
            del self.windows[key]
        return len(stale)
