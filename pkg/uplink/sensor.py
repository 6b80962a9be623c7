"""
A sensor: packet pipeline, semantic detectors and the master uplink.

The pipeline reads the active rule set once per packet from a holder;
pushed rule sets are compiled off to the side and swapped in whole, so
every alert carries the version of the one rule set that produced it.
"""
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple, Union
import logging

from dotenv import dotenv_values

from detectors import DetectorConfig, DetectorSuite
from detectors.constants import DEFAULT_SELECT_TIMEOUT, SboKeyMode
from pipeline import CaptureRecord, Pipeline, read_capture, write_capture
from pipeline.pipeline import Mode, PipelineResult
from rules import CompiledRuleSet, RuleSetHolder, compile_ruleset, load_ruleset, parse_variables
from rules.addresses import VARIABLE_FILE_PREFIX
from rules.exceptions import RuleError

from .client import SensorUplink
from .constants import DEFAULT_MASTER_PORT, DEFAULT_SPOOL_SIZE, RuleAckStatus
from .exceptions import SensorConfigError
from .messages import RulePush

logger = logging.getLogger(__name__)

LIST_FIELDS = ("authorized_masters",)


@dataclass(frozen=True)
class SensorConfig:
    sensor_id: str = "sensor-1"
    master_host: str = ""
    master_port: int = DEFAULT_MASTER_PORT
    token: str = ""
    rules_path: str = ""
    rule_version: int = 1
    variables: Dict[str, str] = field(default_factory=dict)
    authorized_masters: Tuple[str, ...] = ()
    select_timeout: float = DEFAULT_SELECT_TIMEOUT
    sbo_key_mode: str = SboKeyMode.DIGEST
    mode: str = Mode.IDS
    source: str = ""
    output: str = ""
    spool_size: int = DEFAULT_SPOOL_SIZE
    seq_window: int = 65535
    flow_idle_timeout: float = 300.0
    evaluate_all: bool = False

    @property
    def master_address(self) -> Optional[Tuple[str, int]]:
        return (self.master_host, self.master_port) if self.master_host else None

    def variable_table(self):
        """
        Raises:
            RuleSyntaxError: a binding is malformed
        """
        return parse_variables(f"{name}={value}" for name, value in self.variables.items())

    def validate(self) -> "SensorConfig":
        if not self.sensor_id:
            raise SensorConfigError("sensor_id is required")
        if self.mode not in Mode.ALL:
            raise SensorConfigError(f"mode must be one of {Mode.ALL}, got '{self.mode}'")
        if self.mode == Mode.IDS and self.output:
            raise SensorConfigError("ids mode does not write an output capture")
        if self.mode == Mode.IPS and self.source and not self.output:
            raise SensorConfigError("ips mode over a capture file needs an output path")
        if self.spool_size < 1:
            raise SensorConfigError("spool_size must be >= 1")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: Optional["SensorConfig"] = None) -> "SensorConfig":
        """
        Overlay ``key=value`` settings on ``base``. ``var.NAME`` keys bind
        rule variables; unknown keys are ignored.

        Raises:
            SensorConfigError: a value does not fit its field
        """
        base = base or cls()
        known = {f.name for f in fields(cls)}
        changes: Dict[str, Any] = {}
        variables = dict(base.variables)
        for key, raw in values.items():
            if raw is None:
                continue
            if key.startswith(VARIABLE_FILE_PREFIX):
                variables[key[len(VARIABLE_FILE_PREFIX):]] = str(raw)
                continue
            name = key.strip().lower().replace("-", "_")
            if name in known and name != "variables":
                changes[name] = _coerce(name, raw, getattr(base, name))
        return replace(base, variables=variables, **changes)

    @classmethod
    def from_file(cls, path: Union[str, Path], base: Optional["SensorConfig"] = None) -> "SensorConfig":
        if not Path(path).is_file():
            raise SensorConfigError(f"Sensor config file not found: {path}")
        return cls.from_mapping(dotenv_values(path), base)


def _coerce(name: str, raw: Any, current: Any) -> Any:
    if name in LIST_FIELDS:
        items = raw.split(",") if isinstance(raw, str) else list(raw)
        return tuple(item.strip() for item in items if item.strip())
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if isinstance(current, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(current, int):
            return int(text, 0)
        if isinstance(current, float):
            return float(text)
    except ValueError:
        raise SensorConfigError(f"Bad value for {name}: '{raw}'")
    return text


class SensorNode:
    def __init__(self, config: SensorConfig, ruleset: Optional[CompiledRuleSet] = None):
        """
        Raises:
            SensorConfigError: invalid settings or unreadable rules file
            RuleError: the rules file does not compile
        """
        self.config = config.validate()
        if ruleset is None:
            ruleset = self._load_rules()
        self.holder = RuleSetHolder(ruleset)
        self.detectors = DetectorSuite(DetectorConfig(
            authorized_masters=config.authorized_masters,
            select_timeout=config.select_timeout,
            sbo_key_mode=config.sbo_key_mode,
        ))
        self.uplink: Optional[SensorUplink] = None
        if config.master_address is not None:
            self.uplink = SensorUplink(
                config.sensor_id,
                config.master_address,
                token=config.token,
                spool_size=config.spool_size,
                rule_version=lambda: self.holder.version,
                on_rule_push=self.apply_push,
            )
        self.pipeline = Pipeline(
            self.holder,
            detectors=self.detectors,
            mode=config.mode,
            seq_window=config.seq_window,
            idle_timeout=config.flow_idle_timeout,
            evaluate_all=config.evaluate_all,
            on_alert=self._on_alert,
        )
        self.alerts_emitted = 0

    def _load_rules(self) -> CompiledRuleSet:
        path = self.config.rules_path
        if not path or not Path(path).is_file():
            raise SensorConfigError(f"Rules file not found: {path or '(none given)'}")
        return load_ruleset(path, self.config.variable_table(), version=self.config.rule_version)

    def _on_alert(self, alert) -> None:
        self.alerts_emitted += 1
        if self.uplink is not None:
            self.uplink.enqueue(alert)

    @property
    def rule_version(self) -> int:
        return self.holder.version

    def apply_push(self, push: RulePush) -> str:
        """Compile and swap in a pushed rule set. Returns the rule_ack status."""
        if not push.verify():
            logger.warning(f"Rule push v{push.version} failed its checksum")
            return RuleAckStatus.CHECKSUM_MISMATCH
        current = self.holder.current
        if push.version <= current.version:
            logger.warning(f"Ignoring stale rule push v{push.version}, running v{current.version}")
            return RuleAckStatus.STALE
        try:
            variables = (
                parse_variables(f"{name}={value}" for name, value in push.variables.items())
                if push.variables else current.variables
            )
            compiled = compile_ruleset(push.rules, variables, version=push.version)
        except RuleError as e:
            logger.warning(f"Rule push v{push.version} does not compile, keeping v{current.version}: {e.message}")
            return RuleAckStatus.COMPILE_FAILED
        self.holder.swap(compiled)
        return RuleAckStatus.APPLIED

    def start(self) -> None:
        if self.uplink is not None:
            self.uplink.start()

    def stop(self, flush_timeout: float = 0.0) -> None:
        if self.uplink is not None:
            self.uplink.stop(flush_timeout)

    def run(self, records: Optional[Iterable[CaptureRecord]] = None) -> PipelineResult:
        """
        Feed records (the configured source when none are given) through
        the pipeline. In ips mode the forwarded records go to the output.

        Raises:
            CaptureError: the source or output could not be used
        """
        if records is None:
            if not self.config.source:
                raise SensorConfigError("no capture source configured")
            records = read_capture(self.config.source)
        keep = self.config.mode == Mode.IPS
        result = self.pipeline.run(records, keep_output=keep)
        if keep and self.config.output:
            written = write_capture(result.output, self.config.output)
            logger.info(f"Wrote {written} forwarded packets to {self.config.output}")
        return result
