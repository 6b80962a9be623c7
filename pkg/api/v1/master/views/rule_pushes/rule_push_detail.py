from django.http import HttpRequest, HttpResponse
from django.utils.decorators import method_decorator
from django.views import View

from api.v1.master.serializers import RulePushSerializer
from api.v1.master.services import PushService
from api.v1.master.utils.auth import token_required
from api.v1.master.utils.responses import handle_exception, json_success


@method_decorator(token_required, name='dispatch')
class RulePushDetailView(View):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.service = PushService()
        self.serializer = RulePushSerializer()

    def get(self, request: HttpRequest, version: int) -> HttpResponse:
        try:
            push = self.service.get_push(version)
            return json_success({'rule_push': self.serializer.serialize(push, self.service.delivery_status(push))})
        except Exception as e:
            return handle_exception(e)
