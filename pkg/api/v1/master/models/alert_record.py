from django.db import models


class AlertRecord(models.Model):
    sensor_id = models.CharField(max_length=100)
    seq = models.BigIntegerField()
    ts_us = models.BigIntegerField()
    sid = models.IntegerField()
    gid = models.IntegerField(default=0)
    msg = models.TextField(blank=True)
    src_ip = models.CharField(max_length=45)
    src_port = models.IntegerField()
    dst_ip = models.CharField(max_length=45)
    dst_port = models.IntegerField()
    proto = models.CharField(max_length=8)
    dnp3_fc = models.IntegerField(null=True, blank=True)
    rule_pos = models.IntegerField(null=True, blank=True)
    rule_version = models.IntegerField(default=0)
    received_at = models.BigIntegerField()

    class Meta:
        constraints = [
            models.UniqueConstraint(fields=['sensor_id', 'seq'], name='unique_sensor_seq'),
        ]
        indexes = [
            models.Index(fields=['ts_us', 'sensor_id', 'seq'], name='alert_order_idx'),
            models.Index(fields=['gid', 'sid'], name='alert_rule_idx'),
        ]
        ordering = ['ts_us', 'sensor_id', 'seq']

    def __str__(self) -> str:
        return f"{self.sensor_id}#{self.seq} {self.gid}:{self.sid}"
