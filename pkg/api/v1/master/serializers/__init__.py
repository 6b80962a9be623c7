from .alert import AlertRecordSerializer
from .rule_push import RulePushSerializer
from .sensor import SensorSerializer

__all__ = [
    'AlertRecordSerializer',
    'RulePushSerializer',
    'SensorSerializer',
]
