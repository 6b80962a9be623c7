from datetime import datetime, timezone
from typing import List
import threading

from django.conf import settings
from django.core.cache import cache

from ..constants import PresenceKeys

_INDEX_LOCK = threading.Lock()


class PresenceService:
    """Online sensors, kept in the cache with a TTL refreshed on every message."""

    def __init__(self, ttl: int = 0):
        self.ttl = ttl or settings.DNP3IDS['PRESENCE_TTL']

    def mark_online(self, sensor_id: str) -> None:
        cache.set(PresenceKeys.PREFIX + sensor_id, datetime.now(timezone.utc).isoformat(), self.ttl)
        with _INDEX_LOCK:
            known = set(cache.get(PresenceKeys.INDEX) or [])
            if sensor_id not in known:
                known.add(sensor_id)
                cache.set(PresenceKeys.INDEX, sorted(known), None)

    def mark_offline(self, sensor_id: str) -> None:
        cache.delete(PresenceKeys.PREFIX + sensor_id)

    def is_online(self, sensor_id: str) -> bool:
        return cache.get(PresenceKeys.PREFIX + sensor_id) is not None

    def online_sensors(self) -> List[str]:
        known = cache.get(PresenceKeys.INDEX) or []
        present = cache.get_many([PresenceKeys.PREFIX + sensor_id for sensor_id in known])
        return sorted(key[len(PresenceKeys.PREFIX):] for key in present)
