from typing import Any, Mapping, Optional, Tuple
import logging

from django.db import connection, transaction

from uplink import AlertRecord as WireRecord
from uplink import RulePush as WirePush

from ..models import Sensor
from .presence_service import PresenceService
from .push_service import PushService
from .store_service import WRITE_LOCK, AlertStore

logger = logging.getLogger(__name__)


class MasterIngestService:
    """Database-backed side of the master's sensor connections."""

    def __init__(
        self,
        store: Optional[AlertStore] = None,
        pushes: Optional[PushService] = None,
        presence: Optional[PresenceService] = None,
    ):
        self.store = store or AlertStore()
        self.pushes = pushes or PushService()
        self.presence = presence or PresenceService()

    def register(self, sensor_id: str, rule_version: int, address: str) -> int:
        with WRITE_LOCK, transaction.atomic():
            sensor, created = Sensor.objects.get_or_create(sensor_id=sensor_id)
            sensor.address = address
            sensor.rule_version = rule_version
            sensor.connected = True
            sensor.save()
        self.presence.mark_online(sensor_id)
        logger.info(f"{'Registered' if created else 'Reconnected'} sensor {sensor_id} at rule v{rule_version}, last seq {sensor.last_seq}")
        return sensor.last_seq

    def ingest(self, record: WireRecord) -> Tuple[bool, int]:
        stored, contiguous = self.store.append(record)
        self.presence.mark_online(record.sensor_id)
        return stored, contiguous

    def pending_push(self, sensor_id: str) -> Optional[WirePush]:
        return self.pushes.pending_for(sensor_id)

    def record_rule_ack(self, sensor_id: str, version: int, status: str) -> None:
        self.pushes.record_ack(sensor_id, version, status)

    def record_ping(self, sensor_id: str, counters: Mapping[str, Any]) -> None:
        dropped = counters.get("dropped")
        if isinstance(dropped, int):
            with WRITE_LOCK:
                Sensor.objects.filter(sensor_id=sensor_id).update(spool_dropped=dropped)
            if dropped:
                logger.warning(f"Sensor {sensor_id} reports {dropped} alerts dropped from its spool")
        self.presence.mark_online(sensor_id)

    def disconnected(self, sensor_id: str) -> None:
        with WRITE_LOCK:
            Sensor.objects.filter(sensor_id=sensor_id).update(connected=False)
        self.presence.mark_offline(sensor_id)
        # connections are per thread; this one ends with the sensor's handler
        connection.close()
