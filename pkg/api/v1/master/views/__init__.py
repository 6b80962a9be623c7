from .alerts import AlertCollectionView
from .rule_pushes import RulePushCollectionView, RulePushDetailView
from .sensors import SensorCollectionView

__all__ = [
    'AlertCollectionView',
    'RulePushCollectionView',
    'RulePushDetailView',
    'SensorCollectionView'
]
