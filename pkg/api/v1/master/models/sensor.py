from django.db import models


class Sensor(models.Model):
    sensor_id = models.CharField(max_length=100, unique=True)
    address = models.CharField(max_length=64, blank=True)
    last_seq = models.BigIntegerField(default=0)
    rule_version = models.IntegerField(default=0)
    spool_dropped = models.BigIntegerField(default=0)
    connected = models.BooleanField(default=False)
    first_seen = models.DateTimeField(auto_now_add=True)
    last_seen = models.DateTimeField(auto_now=True)

    def __str__(self) -> str:
        return self.sensor_id
