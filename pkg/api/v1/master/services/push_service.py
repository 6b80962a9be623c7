from typing import Dict, Iterable, List, Mapping, Optional
import logging

from django.db import transaction
from django.db.models import Max, QuerySet

from rules import compile_ruleset, parse_variables
from rules.exceptions import RuleError, RuleSetCompileError
from uplink import RulePush as WirePush
from uplink import ruleset_checksum

from ..constants import DeliveryStatus
from ..exceptions import CompileFailedAtMaster, ConflictError, NotFoundError
from ..models import RuleDelivery, RulePush, Sensor
from .store_service import WRITE_LOCK

logger = logging.getLogger(__name__)


class PushService:
    def compile_check(self, rules: str, variables: Mapping[str, str]) -> int:
        """
        Compile a rule set the way a sensor will. Returns the rule count.

        Raises:
            CompileFailedAtMaster: a binding or rule line is rejected
        """
        try:
            table = parse_variables(f"{name}={value}" for name, value in variables.items())
            return len(compile_ruleset(rules, table))
        except RuleSetCompileError as e:
            raise CompileFailedAtMaster([(line, error.message) for line, error in e.errors])
        except RuleError as e:
            raise CompileFailedAtMaster([(0, e.message)])

    def create_push(
        self,
        rules: str,
        variables: Optional[Mapping[str, str]] = None,
        targets: Optional[Iterable[str]] = None,
        version: Optional[int] = None,
    ) -> RulePush:
        """
        Record a versioned rule set for delivery. Nothing is recorded when
        it does not compile here.

        Raises:
            CompileFailedAtMaster: the rule set does not compile
            ConflictError: ``version`` is not above the latest push
        """
        variables = {str(k): str(v) for k, v in (variables or {}).items()}
        count = self.compile_check(rules, variables)
        targets = sorted(set(targets or []))

        with WRITE_LOCK, transaction.atomic():
            latest = RulePush.objects.aggregate(latest=Max('version'))['latest'] or 0
            if version is None:
                version = latest + 1
            elif version <= latest:
                raise ConflictError(f"version must be greater than v{latest}")
            push = RulePush.objects.create(
                version=version,
                rules=rules,
                variables=variables,
                sha256=ruleset_checksum(rules),
                targets=targets,
            )
            sensors = Sensor.objects.filter(sensor_id__in=targets) if targets else Sensor.objects.all()
            RuleDelivery.objects.bulk_create(RuleDelivery(push=push, sensor=sensor) for sensor in sensors)

        logger.info(f"Recorded rule set v{version} ({count} rules) for {', '.join(targets) or 'all sensors'}")
        return push

    def get_push(self, version: int) -> RulePush:
        try:
            return RulePush.objects.get(version=version)
        except RulePush.DoesNotExist:
            raise NotFoundError(f"Rule push v{version} not found")

    def list_pushes(self) -> QuerySet[RulePush]:
        return RulePush.objects.prefetch_related('deliveries__sensor').order_by('-version')

    def pending_for(self, sensor_id: str) -> Optional[WirePush]:
        """Newest push above the sensor's version it has not answered yet."""
        with WRITE_LOCK:
            sensor = Sensor.objects.filter(sensor_id=sensor_id).first()
            if sensor is None:
                return None
            answered = set(
                RuleDelivery.objects.filter(sensor=sensor, status__in=DeliveryStatus.FINAL)
                .values_list('push__version', flat=True)
            )
            for push in RulePush.objects.filter(version__gt=sensor.rule_version).order_by('-version'):
                if push.targets_sensor(sensor_id) and push.version not in answered:
                    return WirePush(push.version, push.rules, dict(push.variables), push.sha256)
            return None

    def record_ack(self, sensor_id: str, version: int, status: str) -> None:
        if status not in DeliveryStatus.FINAL:
            logger.warning(f"Sensor {sensor_id} sent unknown rule_ack status '{status}' for v{version}")
            return
        with WRITE_LOCK, transaction.atomic():
            push = RulePush.objects.filter(version=version).first()
            sensor = Sensor.objects.filter(sensor_id=sensor_id).first()
            if push is None or sensor is None:
                logger.warning(f"rule_ack for unknown push v{version} or sensor {sensor_id}")
                return
            RuleDelivery.objects.update_or_create(push=push, sensor=sensor, defaults={'status': status})
            if status == DeliveryStatus.APPLIED and version > sensor.rule_version:
                Sensor.objects.filter(pk=sensor.pk).update(rule_version=version)

        if status == DeliveryStatus.APPLIED:
            logger.info(f"Sensor {sensor_id} applied rule set v{version}")
        else:
            logger.warning(f"Sensor {sensor_id} did not apply rule set v{version}: {status}")

    def delivery_status(self, push: RulePush) -> Dict[str, str]:
        """Status per targeted sensor; sensors that have not answered are pending."""
        statuses = {d.sensor.sensor_id: d.status for d in push.deliveries.all()}
        sensors = push.targets or list(Sensor.objects.values_list('sensor_id', flat=True))
        return {sensor_id: statuses.get(sensor_id, DeliveryStatus.PENDING) for sensor_id in sorted(sensors)}

    def pending_sensors(self, push: RulePush) -> List[str]:
        return [s for s, status in self.delivery_status(push).items() if status == DeliveryStatus.PENDING]
