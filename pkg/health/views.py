from django.http import JsonResponse
from django.views.decorators.csrf import csrf_exempt

from api.v1.master.services import AlertStore, PresenceService


@csrf_exempt
def health_check(request):
    return JsonResponse({
        "status": "ok",
        "message": "Master is running",
        "stored_alerts": AlertStore().count(),
        "online_sensors": PresenceService().online_sensors(),
    })
