from django.db import models

from ..constants import DeliveryStatus


class RulePush(models.Model):
    version = models.IntegerField(unique=True)
    rules = models.TextField()
    variables = models.JSONField(default=dict, blank=True)
    sha256 = models.CharField(max_length=64)
    # sensor ids; empty means every sensor
    targets = models.JSONField(default=list, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-version']

    def __str__(self) -> str:
        return f"v{self.version}"

    def targets_sensor(self, sensor_id: str) -> bool:
        return not self.targets or sensor_id in self.targets


class RuleDelivery(models.Model):
    push = models.ForeignKey(RulePush, on_delete=models.CASCADE, related_name="deliveries")
    sensor = models.ForeignKey('Sensor', on_delete=models.CASCADE, related_name="deliveries")
    status = models.CharField(max_length=20, choices=DeliveryStatus.choices(), default=DeliveryStatus.PENDING)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        unique_together = ['push', 'sensor']

    def __str__(self) -> str:
        return f"{self.push} -> {self.sensor}: {self.status}"
