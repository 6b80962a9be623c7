from django.http import HttpRequest, HttpResponse
from django.utils.decorators import method_decorator
from django.views import View

from api.v1.master.serializers import SensorSerializer
from api.v1.master.services import PresenceService, SensorService
from api.v1.master.utils.auth import token_required
from api.v1.master.utils.responses import handle_exception, json_success


@method_decorator(token_required, name='dispatch')
class SensorCollectionView(View):
    """GET /api/v1/master/sensors/ - Known sensors with their presence."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.service = SensorService()
        self.presence = PresenceService()
        self.serializer = SensorSerializer()

    def get(self, request: HttpRequest) -> HttpResponse:
        try:
            sensors = list(self.service.list_sensors())
            online = set(self.presence.online_sensors())
            return json_success({'sensors': self.serializer.serialize_many(sensors, online)})
        except Exception as e:
            return handle_exception(e)
