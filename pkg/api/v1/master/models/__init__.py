from .alert_record import AlertRecord
from .rule_push import RuleDelivery, RulePush
from .sensor import Sensor

__all__ = [
    'AlertRecord',
    'RuleDelivery',
    'RulePush',
    'Sensor',
]
