from .alert_collection import AlertCollectionView

__all__ = [
    'AlertCollectionView'
]
