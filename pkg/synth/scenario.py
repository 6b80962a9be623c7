from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import dotenv_values

from dnp3.constants import DEFAULT_DNP3_PORT

from .exceptions import SynthError

USEC_PER_SEC = 1_000_000


@dataclass(frozen=True)
class ScenarioConfig:
    master_ip: str = "10.0.0.1"
    master_port: int = 50000
    outstation_ip: str = "10.0.0.2"
    outstation_port: int = DEFAULT_DNP3_PORT
    master_address: int = 1
    outstation_address: int = 10
    start_time: int = 1_700_000_000 * USEC_PER_SEC
    rate: float = 1.0
    count: int = 100
    attacker_ip: str = "10.0.0.66"
    attacker_port: int = 51066
    seed: int = 0
    flood_count: int = 5
    flood_seconds: float = 10.0
    spoof_source: bool = False
    # poll cycle after which attack traffic is injected; None means the middle
    attack_at: Optional[int] = None

    @property
    def interval_us(self) -> int:
        return int(round(USEC_PER_SEC / self.rate))

    @property
    def injection_cycle(self) -> int:
        if self.attack_at is not None:
            return max(0, min(self.attack_at, self.count))
        return self.count // 2

    def poll_time(self, cycle: int) -> int:
        """Capture time of the request of poll ``cycle`` (0-based), after the handshake."""
        return self.start_time + USEC_PER_SEC // 10 + cycle * self.interval_us

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: Optional["ScenarioConfig"] = None) -> "ScenarioConfig":
        base = base or cls()
        known = {f.name: f for f in fields(cls)}
        changes: Dict[str, Any] = {}
        for key, raw in values.items():
            name = key.strip().lower().replace("-", "_")
            if name not in known or raw is None:
                continue
            current = getattr(base, name)
            changes[name] = _coerce(name, raw, current)
        config = replace(base, **changes)
        if config.rate <= 0:
            raise SynthError("rate must be positive")
        if config.count < 0 or config.flood_count < 1:
            raise SynthError("count must be >= 0 and flood_count >= 1")
        return config

    @classmethod
    def from_file(cls, path: Union[str, Path], base: Optional["ScenarioConfig"] = None) -> "ScenarioConfig":
        if not Path(path).is_file():
            raise SynthError(f"Scenario file not found: {path}")
        return cls.from_mapping(dotenv_values(path), base)


def _coerce(name: str, raw: Any, current: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if name == "attack_at":
            return None if text.lower() in ("", "none") else int(text)
        if isinstance(current, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(current, int):
            return int(text, 0)
        if isinstance(current, float):
            return float(text)
    except ValueError:
        raise SynthError(f"Bad value for {name}: '{raw}'")
    return text
