from django.db.models import QuerySet

from ..exceptions import NotFoundError
from ..models import Sensor


class SensorService:
    def get_sensor(self, sensor_id: str) -> Sensor:
        try:
            return Sensor.objects.get(sensor_id=sensor_id)
        except Sensor.DoesNotExist:
            raise NotFoundError(f"Sensor '{sensor_id}' not found")

    def list_sensors(self) -> QuerySet[Sensor]:
        return Sensor.objects.order_by('sensor_id')
