from typing import Any, Dict, Optional

from django.http import HttpRequest, HttpResponse
from django.utils.decorators import method_decorator
from django.views import View

from api.v1.master.constants import QueryLimits
from api.v1.master.serializers import AlertRecordSerializer
from api.v1.master.services import AlertStore, StoreQuery
from api.v1.master.utils.auth import token_required
from api.v1.master.utils.responses import handle_exception, json_error, json_success


@method_decorator(token_required, name='dispatch')
class AlertCollectionView(View):
    """
    Stored alerts.

    Endpoints:
    - GET /api/v1/master/alerts/ - Query the store

    Query Parameters:
    - start_us, end_us: capture-time range in microseconds, end exclusive
    - sensor_id, sid, gid: exact filters
    - limit: at most this many records (default 1000)
    """

    integer_params = ('start_us', 'end_us', 'sid', 'gid', 'limit', 'after_id')

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.store = AlertStore()
        self.serializer = AlertRecordSerializer()

    def get(self, request: HttpRequest) -> HttpResponse:
        try:
            params = self._validate_query_params(request)
        except ValueError as e:
            return json_error(f"Invalid query parameters. {str(e)}", status=400)

        try:
            records = self.store.query(StoreQuery(**params))
            return json_success({'alerts': self.serializer.serialize_many(records), 'count': len(records)})
        except Exception as e:
            return handle_exception(e)

    def _validate_query_params(self, request: HttpRequest) -> Dict[str, Any]:
        params: Dict[str, Any] = {}
        for name in self.integer_params:
            raw: Optional[str] = request.GET.get(name)
            if raw is None or raw == '':
                continue
            try:
                params[name] = int(raw)
            except ValueError:
                raise ValueError(f"{name} must be an integer")
        sensor_id = request.GET.get('sensor_id')
        if sensor_id:
            params['sensor_id'] = sensor_id
        params.setdefault('limit', QueryLimits.DEFAULT)
        return params
