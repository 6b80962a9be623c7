import json

from django.http import HttpRequest, HttpResponse
from django.utils.decorators import method_decorator
from django.views import View
from django.views.decorators.csrf import csrf_exempt

from api.v1.master.exceptions import ValidationError
from api.v1.master.serializers import RulePushSerializer
from api.v1.master.services import PushService
from api.v1.master.utils.auth import token_required
from api.v1.master.utils.responses import handle_exception, json_error, json_success


@method_decorator(csrf_exempt, name='dispatch')
@method_decorator(token_required, name='dispatch')
class RulePushCollectionView(View):
    """
    Versioned rule sets for the sensors.

    Endpoints:
    - GET /api/v1/master/rule-pushes/ - Pushes with per-sensor delivery status
    - POST /api/v1/master/rule-pushes/ - Compile and record a new push

    POST body: {"rules": "...", "vars": {"NAME": "CIDR,..."}, "targets": [...], "version": N}
    Only "rules" is required.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.service = PushService()
        self.serializer = RulePushSerializer()

    def get(self, request: HttpRequest) -> HttpResponse:
        try:
            pushes = list(self.service.list_pushes())
            deliveries = {push.version: self.service.delivery_status(push) for push in pushes}
            return json_success({'rule_pushes': self.serializer.serialize_many(pushes, deliveries)})
        except Exception as e:
            return handle_exception(e)

    def post(self, request: HttpRequest) -> HttpResponse:
        try:
            data = json.loads(request.body)
        except json.JSONDecodeError as e:
            return json_error(f"Invalid JSON format: {str(e)}", status=400)

        try:
            rules, variables, targets, version = self._validate_body(data)
            push = self.service.create_push(rules, variables, targets=targets, version=version)
            return json_success(self.serializer.serialize(push, self.service.delivery_status(push)), status=201)
        except Exception as e:
            return handle_exception(e)

    def _validate_body(self, data):
        if not isinstance(data, dict):
            raise ValidationError("Body must be a JSON object")
        rules = data.get('rules')
        if not isinstance(rules, str) or not rules.strip():
            raise ValidationError("rules is required")
        variables = data.get('vars') or {}
        targets = data.get('targets') or []
        version = data.get('version')
        if not isinstance(variables, dict):
            raise ValidationError("vars must be an object of NAME: CIDR list")
        if not isinstance(targets, list) or not all(isinstance(t, str) for t in targets):
            raise ValidationError("targets must be a list of sensor ids")
        if version is not None and (not isinstance(version, int) or isinstance(version, bool)):
            raise ValidationError("version must be an integer")
        return rules, variables, targets, version
