from typing import Any, Dict, List

from ..models import AlertRecord


class AlertRecordSerializer:
    def serialize(self, record: AlertRecord) -> Dict[str, Any]:
        data = {
            'id': record.id,
            'sensor_id': record.sensor_id,
            'seq': record.seq,
            'ts_us': record.ts_us,
            'sid': record.sid,
            'gid': record.gid,
            'msg': record.msg,
            'src_ip': record.src_ip,
            'src_port': record.src_port,
            'dst_ip': record.dst_ip,
            'dst_port': record.dst_port,
            'proto': record.proto,
            'rule_version': record.rule_version,
            'received_at': record.received_at,
        }
        if record.dnp3_fc is not None:
            data['dnp3_fc'] = record.dnp3_fc
        if record.rule_pos is not None:
            data['rule_pos'] = record.rule_pos
        return data

    def serialize_many(self, records: List[AlertRecord]) -> List[Dict[str, Any]]:
        return [self.serialize(record) for record in records]
