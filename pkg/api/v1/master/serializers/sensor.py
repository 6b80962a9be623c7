from typing import Any, Collection, Dict, List

from ..models import Sensor


class SensorSerializer:
    def serialize(self, sensor: Sensor, online: bool = False) -> Dict[str, Any]:
        return {
            'sensor_id': sensor.sensor_id,
            'address': sensor.address,
            'last_seq': sensor.last_seq,
            'rule_version': sensor.rule_version,
            'spool_dropped': sensor.spool_dropped,
            'connected': sensor.connected,
            'online': online,
            'first_seen': sensor.first_seen.isoformat(),
            'last_seen': sensor.last_seen.isoformat(),
        }

    def serialize_many(self, sensors: List[Sensor], online: Collection[str] = ()) -> List[Dict[str, Any]]:
        return [self.serialize(sensor, sensor.sensor_id in online) for sensor in sensors]
