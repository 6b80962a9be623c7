import threading
import time
from unittest import mock

from django.conf import settings
from django.core.cache import cache
from django.test import TestCase, TransactionTestCase, override_settings

from api.v1.master.constants import DeliveryStatus
from api.v1.master.exceptions import CompileFailedAtMaster, ConflictError, NotFoundError, ValidationError
from api.v1.master.models import AlertRecord, RuleDelivery, RulePush, Sensor
from api.v1.master.services import (
    AlertStore,
    MasterIngestService,
    PresenceService,
    PushService,
    StoreQuery,
    to_wire,
)
from api.v1.master.services.store_service import WRITE_LOCK
from api.v1.master.utils.auth import issue_api_token
from rules import compile_ruleset
from synth import AttackKind, ScenarioConfig, synth_attack
from uplink import AlertRecord as WireRecord
from uplink import MasterServer, RuleAckStatus, SensorConfig, SensorNode, issue_token

SUBSTATION_RULES = (settings.BASE_DIR / "rulesets" / "substation.rules").read_text()
VARIABLES = {"SRC": "10.0.0.1,10.0.0.2", "DST": "10.0.0.2"}


def wire(seq, sensor_id="s1", ts_us=None, sid=3, gid=0):
    return WireRecord(
        sensor_id=sensor_id, seq=seq, ts_us=ts_us if ts_us is not None else 1000 + seq, sid=sid, gid=gid,
        msg="DNP3 operate", src_ip="10.0.0.66", src_port=51066, dst_ip="10.0.0.2", dst_port=20000,
        proto="tcp", rule_version=1, dnp3_fc=4, rule_pos=0, received_at=99,
    )


def wait_until(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        with WRITE_LOCK:
            if predicate():
                return True
        time.sleep(0.05)
    with WRITE_LOCK:
        return predicate()


class AlertStoreTests(TestCase):
    def setUp(self):
        self.store = AlertStore()

    def test_append_and_ack(self):
        results = [self.store.append(wire(seq)) for seq in (1, 2, 3)]
        self.assertEqual(results, [(True, 1), (True, 2), (True, 3)])
        self.assertEqual(self.store.count("s1"), 3)

    def test_retransmission_ignored(self):
        for seq in (1, 2, 3):
            self.store.append(wire(seq))
        self.assertEqual(self.store.append(wire(3)), (False, 3))
        self.assertEqual(self.store.count(), 3)

    def test_gap_then_fill(self):
        self.store.append(wire(1))
        self.assertEqual(self.store.append(wire(3)), (True, 1))
        self.assertEqual(self.store.append(wire(2)), (True, 3))
        self.assertEqual(self.store.last_contiguous("s1"), 3)

    def test_record_round_trip(self):
        self.store.append(wire(1))
        self.assertEqual(to_wire(AlertRecord.objects.get()), wire(1))

    def test_empty_query(self):
        self.assertEqual(self.store.query(StoreQuery()), [])

    def test_filters(self):
        for seq in range(1, 7):
            self.store.append(wire(seq, sid=3 if seq % 2 else 5))
        self.store.append(wire(1, sensor_id="s2", gid=145, sid=1))
        self.assertEqual([r.seq for r in self.store.query(StoreQuery(sid=3, gid=0))], [1, 3, 5])
        self.assertEqual([r.sensor_id for r in self.store.query(StoreQuery(gid=145))], ["s2"])
        self.assertEqual(len(self.store.query(StoreQuery(sensor_id="s1"))), 6)

    def test_time_range_and_order(self):
        for seq in range(1, 11):
            self.store.append(wire(seq, ts_us=seq * 100))
        for seq in range(1, 6):
            self.store.append(wire(seq, sensor_id="s0", ts_us=seq * 100))
        half = self.store.query(StoreQuery(start_us=100, end_us=600, sensor_id="s1"))
        self.assertEqual([r.seq for r in half], [1, 2, 3, 4, 5])
        ordered = self.store.query(StoreQuery(end_us=300))
        self.assertEqual([(r.ts_us, r.sensor_id) for r in ordered], [(100, "s0"), (100, "s1"), (200, "s0"), (200, "s1")])
        self.assertEqual(len(self.store.query(StoreQuery(limit=3))), 3)

    def test_bad_query(self):
        with self.assertRaises(ValidationError):
            StoreQuery(limit=0)
        with self.assertRaises(ValidationError):
            StoreQuery(start_us=10, end_us=5)

    def test_failed_append_leaves_prefix(self):
        create = AlertRecord.objects.create
        calls = {"n": 0}

        def failing_create(**fields):
            calls["n"] += 1
            if calls["n"] == 4:
                raise RuntimeError("disk gone")
            return create(**fields)

        with mock.patch.object(AlertRecord.objects, "create", side_effect=failing_create):
            for seq in (1, 2, 3):
                self.store.append(wire(seq))
            with self.assertRaises(RuntimeError):
                self.store.append(wire(4))
        self.assertEqual(sorted(AlertRecord.objects.values_list("seq", flat=True)), [1, 2, 3])
        self.assertEqual(self.store.last_contiguous("s1"), 3)
        self.assertEqual(self.store.append(wire(4)), (True, 4))


class PushServiceTests(TestCase):
    def setUp(self):
        cache.clear()
        self.service = PushService()
        self.ingest = MasterIngestService()
        self.ingest.register("s1", 1, "127.0.0.1:50001")

    def test_syntax_error_rejected_at_master(self):
        with self.assertRaises(CompileFailedAtMaster) as raised:
            self.service.create_push("alert tcp any any -> any any (sid:1;)\nalert bogus\n", VARIABLES)
        self.assertEqual(raised.exception.errors[0][0], 2)
        self.assertFalse(RulePush.objects.exists())
        self.assertIsNone(self.service.pending_for("s1"))

    def test_unbound_variable_rejected(self):
        with self.assertRaises(CompileFailedAtMaster):
            self.service.create_push(SUBSTATION_RULES, {})

    def test_versions(self):
        self.assertEqual(self.service.create_push(SUBSTATION_RULES, VARIABLES).version, 1)
        self.assertEqual(self.service.create_push(SUBSTATION_RULES, VARIABLES, version=5).version, 5)
        self.assertEqual(self.service.create_push(SUBSTATION_RULES, VARIABLES).version, 6)
        with self.assertRaises(ConflictError):
            self.service.create_push(SUBSTATION_RULES, VARIABLES, version=6)

    def test_pending_until_applied(self):
        self.service.create_push(SUBSTATION_RULES, VARIABLES, version=2)
        push = self.service.pending_for("s1")
        self.assertEqual(push.version, 2)
        self.assertTrue(push.verify())
        self.assertEqual(push.variables, VARIABLES)
        self.service.record_ack("s1", 2, RuleAckStatus.APPLIED)
        self.assertEqual(Sensor.objects.get(sensor_id="s1").rule_version, 2)
        self.assertIsNone(self.service.pending_for("s1"))

    def test_failed_sensor_keeps_version(self):
        push = self.service.create_push(SUBSTATION_RULES, VARIABLES, version=2)
        self.service.record_ack("s1", 2, RuleAckStatus.COMPILE_FAILED)
        self.assertIsNone(self.service.pending_for("s1"))
        self.assertEqual(Sensor.objects.get(sensor_id="s1").rule_version, 1)
        self.assertEqual(self.service.delivery_status(push), {"s1": DeliveryStatus.COMPILE_FAILED})

    def test_targets_and_pending_report(self):
        self.ingest.register("s2", 1, "127.0.0.1:50002")
        push = self.service.create_push(SUBSTATION_RULES, VARIABLES, targets=["s2"], version=2)
        self.assertIsNone(self.service.pending_for("s1"))
        self.assertEqual(self.service.pending_for("s2").version, 2)
        self.assertEqual(self.service.pending_sensors(push), ["s2"])
        self.assertEqual(RuleDelivery.objects.filter(push=push).count(), 1)

    def test_push_not_above_sensor_version_is_not_offered(self):
        self.ingest.register("s3", 4, "127.0.0.1:50003")
        self.service.create_push(SUBSTATION_RULES, VARIABLES, version=3)
        self.assertIsNone(self.service.pending_for("s3"))

    def test_unknown_version(self):
        with self.assertRaises(NotFoundError):
            self.service.get_push(42)


class PresenceTests(TestCase):
    def setUp(self):
        cache.clear()

    def test_online_and_offline(self):
        presence = PresenceService(ttl=60)
        presence.mark_online("s2")
        presence.mark_online("s1")
        self.assertEqual(presence.online_sensors(), ["s1", "s2"])
        presence.mark_offline("s2")
        self.assertEqual(presence.online_sensors(), ["s1"])
        self.assertFalse(presence.is_online("s2"))


@override_settings(DNP3IDS_SECRET="test-secret")
class MasterApiTests(TestCase):
    def setUp(self):
        cache.clear()
        self.auth = {"HTTP_AUTHORIZATION": f"Bearer {issue_api_token()}"}
        store = AlertStore()
        for seq in range(1, 5):
            store.append(wire(seq, sid=3 if seq < 3 else 9))

    def test_token_required(self):
        self.assertEqual(self.client.get("/api/v1/master/alerts/").status_code, 401)
        forged = {"HTTP_AUTHORIZATION": f"Bearer {issue_token('operator', 'other-secret')}"}
        response = self.client.get("/api/v1/master/alerts/", **forged)
        self.assertEqual(response.status_code, 401)
        self.assertEqual(response.json()["status"], "error")

    @override_settings(DNP3IDS_SECRET="")
    def test_api_closed_without_secret(self):
        self.assertEqual(self.client.get("/api/v1/master/sensors/", **self.auth).status_code, 401)

    def test_query_alerts(self):
        response = self.client.get("/api/v1/master/alerts/", {"sid": 3}, **self.auth)
        self.assertEqual(response.status_code, 200)
        data = response.json()["data"]
        self.assertEqual(data["count"], 2)
        self.assertEqual([a["seq"] for a in data["alerts"]], [1, 2])
        self.assertEqual(data["alerts"][0]["dnp3_fc"], 4)

    def test_bad_query_params(self):
        self.assertEqual(self.client.get("/api/v1/master/alerts/", {"sid": "x"}, **self.auth).status_code, 400)
        self.assertEqual(self.client.get("/api/v1/master/alerts/", {"limit": 0}, **self.auth).status_code, 400)

    def test_sensors(self):
        PresenceService().mark_online("s1")
        sensors = self.client.get("/api/v1/master/sensors/", **self.auth).json()["data"]["sensors"]
        self.assertEqual([(s["sensor_id"], s["last_seq"], s["online"]) for s in sensors], [("s1", 4, True)])

    def test_create_push(self):
        response = self.client.post(
            "/api/v1/master/rule-pushes/",
            {"rules": SUBSTATION_RULES, "vars": VARIABLES},
            content_type="application/json",
            **self.auth,
        )
        self.assertEqual(response.status_code, 201)
        data = response.json()["data"]
        self.assertEqual(data["version"], 1)
        self.assertEqual(data["deliveries"], {"s1": DeliveryStatus.PENDING})
        detail = self.client.get("/api/v1/master/rule-pushes/1/", **self.auth).json()["data"]["rule_push"]
        self.assertEqual(detail["sha256"], data["sha256"])
        listing = self.client.get("/api/v1/master/rule-pushes/", **self.auth).json()["data"]["rule_pushes"]
        self.assertEqual([p["version"] for p in listing], [1])

    def test_push_rejections(self):
        post = lambda body: self.client.post(
            "/api/v1/master/rule-pushes/", body, content_type="application/json", **self.auth
        )
        broken = post({"rules": "alert tcp any any -> any any (content:\"|04\"; sid:1;)", "vars": VARIABLES})
        self.assertEqual(broken.status_code, 400)
        self.assertIn("does not compile", broken.json()["message"])
        self.assertEqual(broken.json()["errors"][0]["line"], 1)
        self.assertEqual(post({"vars": VARIABLES}).status_code, 400)
        self.assertEqual(post({"rules": SUBSTATION_RULES, "vars": VARIABLES, "version": "2"}).status_code, 400)
        self.assertEqual(
            self.client.post("/api/v1/master/rule-pushes/", "{", content_type="application/json", **self.auth).status_code,
            400,
        )
        self.assertFalse(RulePush.objects.exists())
        self.assertEqual(self.client.get("/api/v1/master/rule-pushes/7/", **self.auth).status_code, 404)


class DistributedIntegrityTests(TransactionTestCase):
    """Two sensors, one master, real sockets."""

    def setUp(self):
        cache.clear()
        self.server = MasterServer(("127.0.0.1", 0), MasterIngestService(), poll_interval=0.05)
        self.server.start()
        self.nodes = {
            sensor_id: self.sensor(sensor_id)
            for sensor_id in ("substation-1", "substation-2")
        }
        self.captures = {
            "substation-1": synth_attack(AttackKind.SELECT_OPERATE_REPLAY, ScenarioConfig(count=20)),
            "substation-2": synth_attack(AttackKind.COLD_RESTART, ScenarioConfig(count=20, seed=2)),
        }

    def tearDown(self):
        for node in self.nodes.values():
            node.stop()
        self.server.stop()

    def sensor(self, sensor_id):
        config = SensorConfig(
            sensor_id=sensor_id,
            master_host="127.0.0.1",
            master_port=self.server.port,
            variables=VARIABLES,
            authorized_masters=("10.0.0.1",),
        )
        node = SensorNode(config, ruleset=compile_ruleset(SUBSTATION_RULES, config.variable_table(), version=1))
        node.uplink.poll_interval = 0.05
        node.start()
        return node

    def replay_all(self):
        threads = [
            threading.Thread(target=self.nodes[sensor_id].run, args=(records,))
            for sensor_id, records in self.captures.items()
        ]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        for node in self.nodes.values():
            self.assertTrue(node.uplink.flush(20.0))

    def test_exactly_once_and_push(self):
        self.replay_all()
        with WRITE_LOCK:
            for sensor_id, node in self.nodes.items():
                emitted = node.uplink.emitted
                self.assertGreater(emitted, 0)
                seqs = list(AlertRecord.objects.filter(sensor_id=sensor_id).order_by("seq").values_list("seq", flat=True))
                self.assertEqual(seqs, list(range(1, emitted + 1)))
                self.assertEqual(Sensor.objects.get(sensor_id=sensor_id).last_seq, emitted)
            self.assertEqual(AlertRecord.objects.count(), sum(n.uplink.emitted for n in self.nodes.values()))
            before = {sensor_id: node.uplink.emitted for sensor_id, node in self.nodes.items()}

        PushService().create_push(SUBSTATION_RULES, VARIABLES, version=2)
        self.assertTrue(wait_until(lambda: RuleDelivery.objects.filter(
            push__version=2, status=DeliveryStatus.APPLIED,
        ).count() == 2))
        self.assertTrue(all(node.rule_version == 2 for node in self.nodes.values()))

        self.replay_all()
        with WRITE_LOCK:
            later = AlertRecord.objects.exclude(
                sensor_id="substation-1", seq__lte=before["substation-1"],
            ).exclude(sensor_id="substation-2", seq__lte=before["substation-2"])
            self.assertTrue(later.exists())
            self.assertEqual(set(later.values_list("rule_version", flat=True)), {2})
            self.assertEqual(AlertRecord.objects.count(), sum(n.uplink.emitted for n in self.nodes.values()))
