from django.core.cache import cache
from django.test import TestCase

from api.v1.master.services import AlertStore, PresenceService
from uplink import AlertRecord


class HealthCheckTests(TestCase):
    def setUp(self):
        cache.clear()

    def test_reports_store_and_presence(self):
        AlertStore().append(AlertRecord(
            sensor_id="s1", seq=1, ts_us=1, sid=3, gid=0, msg="operate", src_ip="10.0.0.66",
            src_port=51066, dst_ip="10.0.0.2", dst_port=20000, proto="tcp", received_at=5,
        ))
        PresenceService().mark_online("s1")
        body = self.client.get("/health/").json()
        self.assertEqual(body["status"], "ok")
        self.assertEqual(body["stored_alerts"], 1)
        self.assertEqual(body["online_sensors"], ["s1"])

    def test_empty(self):
        body = self.client.get("/health/").json()
        self.assertEqual((body["stored_alerts"], body["online_sensors"]), (0, []))
