"""
The storage node: alert records from every sensor in one ordered store.

Appends are serialized through one process-wide writer lock and each
append is its own transaction, so readers only ever see a prefix of
committed records and a sensor's last contiguous seq never runs ahead of
what is stored.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging
import threading

from django.db import transaction

from uplink import AlertRecord as WireRecord

from ..constants import QueryLimits
from ..exceptions import ValidationError
from ..models import AlertRecord, Sensor

logger = logging.getLogger(__name__)

WRITE_LOCK = threading.RLock()


@dataclass(frozen=True)
class StoreQuery:
    start_us: Optional[int] = None
    end_us: Optional[int] = None
    sensor_id: Optional[str] = None
    sid: Optional[int] = None
    gid: Optional[int] = None
    limit: int = QueryLimits.DEFAULT
    after_id: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.limit <= QueryLimits.MAX:
            raise ValidationError(f"limit must be between 1 and {QueryLimits.MAX}")
        if self.start_us is not None and self.end_us is not None and self.end_us < self.start_us:
            raise ValidationError("end_us is before start_us")


class AlertStore:
    def append(self, record: WireRecord) -> Tuple[bool, int]:
        """
        Store a record once. Returns (newly stored, last contiguous seq of
        the record's sensor). A (sensor_id, seq) already present is left
        untouched.
        """
        with WRITE_LOCK, transaction.atomic():
            sensor, _ = Sensor.objects.get_or_create(sensor_id=record.sensor_id)
            if AlertRecord.objects.filter(sensor_id=record.sensor_id, seq=record.seq).exists():
                logger.debug(f"Duplicate alert {record.sensor_id}#{record.seq} ignored")
                return False, sensor.last_seq

            AlertRecord.objects.create(**record.wire_fields(), received_at=record.received_at or 0)
            last = sensor.last_seq
            if record.seq == last + 1:
                later = (
                    AlertRecord.objects.filter(sensor_id=record.sensor_id, seq__gt=last)
                    .order_by('seq')
                    .values_list('seq', flat=True)
                )
                for seq in later:
                    if seq != last + 1:
                        break
                    last = seq
                Sensor.objects.filter(pk=sensor.pk).update(last_seq=last)
            elif record.seq > last + 1:
                logger.warning(f"Gap in seqs from sensor {record.sensor_id}: have {last}, got {record.seq}")
            return True, last

    def last_contiguous(self, sensor_id: str) -> int:
        sensor = Sensor.objects.filter(sensor_id=sensor_id).first()
        return sensor.last_seq if sensor else 0

    def count(self, sensor_id: Optional[str] = None) -> int:
        records = AlertRecord.objects.all()
        if sensor_id is not None:
            records = records.filter(sensor_id=sensor_id)
        return records.count()

    def query(self, q: StoreQuery) -> List[AlertRecord]:
        """Records matching every given filter in (ts_us, sensor_id, seq) order; end_us is exclusive."""
        records = AlertRecord.objects.all()
        if q.start_us is not None:
            records = records.filter(ts_us__gte=q.start_us)
        if q.end_us is not None:
            records = records.filter(ts_us__lt=q.end_us)
        if q.sensor_id is not None:
            records = records.filter(sensor_id=q.sensor_id)
        if q.sid is not None:
            records = records.filter(sid=q.sid)
        if q.gid is not None:
            records = records.filter(gid=q.gid)
        if q.after_id is not None:
            records = records.filter(id__gt=q.after_id)
        return list(records.order_by('ts_us', 'sensor_id', 'seq')[:q.limit])


def to_wire(record: AlertRecord) -> WireRecord:
    return WireRecord(
        sensor_id=record.sensor_id,
        seq=record.seq,
        ts_us=record.ts_us,
        sid=record.sid,
        gid=record.gid,
        msg=record.msg,
        src_ip=record.src_ip,
        src_port=record.src_port,
        dst_ip=record.dst_ip,
        dst_port=record.dst_port,
        proto=record.proto,
        rule_version=record.rule_version,
        dnp3_fc=record.dnp3_fc,
        rule_pos=record.rule_pos,
        received_at=record.received_at,
    )
