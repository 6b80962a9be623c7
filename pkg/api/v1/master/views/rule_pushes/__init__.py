from .rule_push_collection import RulePushCollectionView
from .rule_push_detail import RulePushDetailView

__all__ = [
    'RulePushCollectionView',
    'RulePushDetailView'
]
