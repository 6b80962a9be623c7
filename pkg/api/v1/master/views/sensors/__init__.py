from .sensor_collection import SensorCollectionView

__all__ = [
    'SensorCollectionView'
]
