from api.v1.master.models import AlertRecord, RuleDelivery, RulePush, Sensor

__all__ = [
    'AlertRecord',
    'RuleDelivery',
    'RulePush',
    'Sensor',
]
