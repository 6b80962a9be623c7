from django.contrib import admin
from api.v1.master.models import AlertRecord, RuleDelivery, RulePush, Sensor

admin.site.register(AlertRecord)
admin.site.register(RuleDelivery)
admin.site.register(RulePush)
admin.site.register(Sensor)
