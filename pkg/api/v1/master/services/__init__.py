from .ingest_service import MasterIngestService
from .presence_service import PresenceService
from .push_service import PushService
from .sensor_service import SensorService
from .store_service import AlertStore, StoreQuery, to_wire


__all__ = [
    'MasterIngestService',
    'PresenceService',
    'PushService',
    'SensorService',
    'AlertStore',
    'StoreQuery',
    'to_wire',
]
