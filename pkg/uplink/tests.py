import os
import socket
import tempfile
import threading
import time

from django.conf import settings
from django.test import SimpleTestCase

from rules import Alert, compile_ruleset, load_ruleset, parse_variables
from synth import AttackKind, ScenarioConfig, synth_attack
from uplink import (
    AlertRecord,
    AlertSpool,
    AuthenticationFailed,
    MalformedMessage,
    MasterServer,
    MessageType,
    PROTOCOL_VERSION,
    RuleAckStatus,
    RulePush,
    SensorConfig,
    SensorConfigError,
    SensorNode,
    SensorUplink,
    decode_alert,
    decode_message,
    encode_alert,
    issue_token,
    verify_token,
)
from uplink.channel import LineChannel
from uplink.messages import hello_message

RULES_DIR = settings.BASE_DIR / "rulesets"
VARIABLES = {"SRC": "10.0.0.1,10.0.0.2", "DST": "10.0.0.2"}
OPERATE_ONLY = 'alert tcp !$SRC any -> $DST any (content:" 04 "; offset:12; depth:1; msg:"operate v{v}"; sid:3;)\n'


def record(seq, sensor_id="s1", **changes):
    values = dict(
        sensor_id=sensor_id, seq=seq, ts_us=1_700_000_000_000_000 + seq, sid=3, gid=0,
        msg="DNP3 operate", src_ip="10.0.0.66", src_port=51066, dst_ip="10.0.0.2",
        dst_port=20000, proto="tcp", rule_version=1,
    )
    values.update(changes)
    return AlertRecord(**values)


def wait_until(predicate, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.02)
    return predicate()


class MemoryBackend:
    def __init__(self):
        self.lock = threading.Lock()
        self.records = {}
        self.contiguous = {}
        self.pushes = {}
        self.rule_acks = []
        self.pings = []

    def register(self, sensor_id, rule_version, address):
        with self.lock:
            return self.contiguous.get(sensor_id, 0)

    def ingest(self, record):
        with self.lock:
            stored = self.records.setdefault(record.sensor_id, {})
            last = self.contiguous.get(record.sensor_id, 0)
            if record.seq in stored:
                return False, last
            stored[record.seq] = record
            while last + 1 in stored:
                last += 1
            self.contiguous[record.sensor_id] = last
            return True, last

    def pending_push(self, sensor_id):
        with self.lock:
            return self.pushes.get(sensor_id)

    def record_rule_ack(self, sensor_id, version, status):
        with self.lock:
            self.rule_acks.append((sensor_id, version, status))
            self.pushes.pop(sensor_id, None)

    def record_ping(self, sensor_id, counters):
        with self.lock:
            self.pings.append((sensor_id, counters))

    def disconnected(self, sensor_id):
        pass

    def count(self, sensor_id):
        with self.lock:
            return len(self.records.get(sensor_id, {}))


class MessageTests(SimpleTestCase):
    def test_optional_fields_omitted(self):
        line = encode_alert(record(1))
        self.assertTrue(line.endswith(b"\n"))
        self.assertEqual(line.count(b"\n"), 1)
        message = decode_message(line)
        self.assertNotIn("dnp3_fc", message)
        self.assertNotIn("rule_pos", message)
        self.assertEqual(message["type"], MessageType.ALERT)

    def test_quotes_are_escaped(self):
        original = record(2, msg='operate "trip" \\ breaker')
        line = encode_alert(original)
        self.assertIn(b'\\"trip\\"', line)
        self.assertEqual(decode_alert(line), original)

    def test_round_trip_of_pipeline_alert(self):
        ruleset = load_ruleset(RULES_DIR / "substation.rules", parse_variables(f"{k}={v}" for k, v in VARIABLES.items()))
        node = SensorNode(SensorConfig(), ruleset=ruleset)
        alerts = node.run(synth_attack(AttackKind.SELECT_OPERATE_REPLAY, ScenarioConfig(count=10))).alerts
        operate = next(alert for alert in alerts if alert.rule_id == (0, 3))
        original = AlertRecord.from_alert("s1", 7, operate)
        self.assertEqual(original.dnp3_fc, 0x04)
        self.assertEqual(original.rule_pos, 0)
        self.assertEqual(decode_alert(encode_alert(original)), original)

    def test_malformed_lines(self):
        for line in (b"not json\n", b"[1, 2]\n", b'{"type": "gossip"}\n', b"\xff\xfe\n"):
            with self.subTest(line=line):
                with self.assertRaises(MalformedMessage):
                    decode_message(line)
        with self.assertRaises(MalformedMessage):
            decode_alert(b'{"type": "alert", "sensor_id": "s1", "seq": 1}\n')
        with self.assertRaises(MalformedMessage):
            decode_alert(encode_alert(record(1)).replace(b'"seq":1', b'"seq":"1"'))

    def test_rule_push_checksum(self):
        push = RulePush.create(2, OPERATE_ONLY.format(v=2), VARIABLES)
        self.assertTrue(push.verify())
        self.assertEqual(RulePush.from_message(push.to_message()), push)
        tampered = RulePush(push.version, push.rules + "\n", push.variables, push.sha256)
        self.assertFalse(tampered.verify())
        with self.assertRaises(MalformedMessage):
            RulePush.from_message({"type": MessageType.RULE_PUSH, "version": "2", "rules": "", "sha256": ""})


class TokenTests(SimpleTestCase):
    def test_issue_and_verify(self):
        token = issue_token("s1", "secret")
        self.assertEqual(verify_token(token, "secret", subject="s1"), "s1")

    def test_rejections(self):
        token = issue_token("s1", "secret")
        with self.assertRaises(AuthenticationFailed):
            verify_token(token, "other")
        with self.assertRaises(AuthenticationFailed):
            verify_token(token, "secret", subject="s2")
        with self.assertRaises(AuthenticationFailed):
            verify_token("garbage", "secret")


class SpoolTests(SimpleTestCase):
    def test_overflow_drops_oldest(self):
        spool = AlertSpool(size=3)
        for seq in range(1, 6):
            spool.append(record(seq))
        self.assertEqual([r.seq for r in spool.after(0)], [3, 4, 5])
        self.assertEqual(spool.dropped, 2)

    def test_acknowledge(self):
        spool = AlertSpool(size=10)
        for seq in range(1, 6):
            spool.append(record(seq))
        spool.acknowledge(2)
        self.assertEqual([r.seq for r in spool.after(0)], [3, 4, 5])
        spool.acknowledge(2, acked=4)
        self.assertEqual([r.seq for r in spool.after(0)], [3, 5])
        self.assertFalse(spool.wait_empty(0.01))

    def test_size_must_be_positive(self):
        with self.assertRaises(ValueError):
            AlertSpool(size=0)


class SensorConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "sensor.env")

    def tearDown(self):
        self.tmp.cleanup()

    def test_file_values(self):
        with open(self.path, "w") as handle:
            handle.write(
                "sensor_id=rtu-7\nmaster_host=10.9.0.1\nmaster_port=7100\n"
                "authorized_masters=10.0.0.1, 10.0.0.3\nvar.SRC=10.0.0.1\nselect_timeout=5\nspool_size=50\n"
            )
        config = SensorConfig.from_file(self.path)
        self.assertEqual(config.sensor_id, "rtu-7")
        self.assertEqual(config.master_address, ("10.9.0.1", 7100))
        self.assertEqual(config.authorized_masters, ("10.0.0.1", "10.0.0.3"))
        self.assertEqual(config.variables, {"SRC": "10.0.0.1"})
        self.assertEqual(config.select_timeout, 5.0)
        self.assertEqual(config.spool_size, 50)

    def test_flags_override_file(self):
        base = SensorConfig(sensor_id="from-file", spool_size=10)
        config = SensorConfig.from_mapping({"spool_size": 20}, base)
        self.assertEqual((config.sensor_id, config.spool_size), ("from-file", 20))

    def test_mode_and_output(self):
        with self.assertRaises(SensorConfigError):
            SensorConfig(mode="ids", output="out.pcap").validate()
        with self.assertRaises(SensorConfigError):
            SensorConfig(mode="ips", source="in.pcap").validate()
        with self.assertRaises(SensorConfigError):
            SensorConfig(mode="tap").validate()
        SensorConfig(mode="ips", source="in.pcap", output="out.pcap").validate()

    def test_bad_value(self):
        with self.assertRaises(SensorConfigError):
            SensorConfig.from_mapping({"spool_size": "lots"})

    def test_missing_rules_file(self):
        config = SensorConfig(rules_path=os.path.join(self.tmp.name, "absent.rules"))
        with self.assertRaises(SensorConfigError):
            SensorNode(config)


class ApplyPushTests(SimpleTestCase):
    def setUp(self):
        variables = parse_variables(f"{k}={v}" for k, v in VARIABLES.items())
        self.node = SensorNode(SensorConfig(), ruleset=compile_ruleset(OPERATE_ONLY.format(v=1), variables, version=1))
        self.capture = synth_attack(AttackKind.SELECT_OPERATE_REPLAY, ScenarioConfig(count=6))

    def test_applied_push_changes_alert_version(self):
        status = self.node.apply_push(RulePush.create(2, OPERATE_ONLY.format(v=2), VARIABLES))
        self.assertEqual(status, RuleAckStatus.APPLIED)
        alerts = self.node.run(self.capture).alerts
        self.assertTrue(alerts)
        self.assertTrue(all(alert.rule_version == 2 and alert.msg == "operate v2" for alert in alerts))

    def test_push_without_vars_keeps_bindings(self):
        self.assertEqual(self.node.apply_push(RulePush.create(2, OPERATE_ONLY.format(v=2))), RuleAckStatus.APPLIED)
        self.assertTrue(self.node.run(self.capture).alerts)

    def test_stale_push(self):
        self.assertEqual(self.node.apply_push(RulePush.create(1, OPERATE_ONLY.format(v=9))), RuleAckStatus.STALE)
        self.assertEqual(self.node.rule_version, 1)

    def test_bad_checksum(self):
        push = RulePush(2, OPERATE_ONLY.format(v=2), {}, "0" * 64)
        self.assertEqual(self.node.apply_push(push), RuleAckStatus.CHECKSUM_MISMATCH)
        self.assertEqual(self.node.rule_version, 1)

    def test_compile_failure_keeps_rules(self):
        push = RulePush.create(2, "alert tcp any any -> any any (content:\"|04|\";)\n")
        self.assertEqual(self.node.apply_push(push), RuleAckStatus.COMPILE_FAILED)
        alerts = self.node.run(self.capture).alerts
        self.assertTrue(all(alert.rule_version == 1 for alert in alerts))


class MasterServerTests(SimpleTestCase):
    def setUp(self):
        self.backend = MemoryBackend()
        self.server = MasterServer(("127.0.0.1", 0), self.backend, poll_interval=0.05)
        self.server.start()
        self.channels = []

    def tearDown(self):
        for channel in self.channels:
            channel.close()
        self.server.stop()

    def connect(self, sensor_id="s1", proto_ver=PROTOCOL_VERSION, token=""):
        channel = LineChannel(socket.create_connection(("127.0.0.1", self.server.port)))
        self.channels.append(channel)
        channel.send(hello_message(sensor_id, 1, token, proto_ver=proto_ver))
        return channel, decode_message(channel.read_line(5.0))

    def acks(self, channel, count):
        received = []
        while len(received) < count:
            received.append(decode_message(channel.read_line(5.0)))
        return received

    def test_ingest_and_ack(self):
        channel, reply = self.connect()
        self.assertEqual((reply["type"], reply["seq"]), (MessageType.HELLO_ACK, 0))
        for seq in (1, 2, 3):
            channel.send_raw(encode_alert(record(seq)))
        acks = self.acks(channel, 3)
        self.assertEqual([a["seq"] for a in acks], [1, 2, 3])
        self.assertEqual(self.backend.count("s1"), 3)

    def test_retransmission_is_idempotent(self):
        channel, _ = self.connect()
        for seq in (1, 2, 3, 3):
            channel.send_raw(encode_alert(record(seq)))
        acks = self.acks(channel, 4)
        self.assertEqual(acks[-1]["seq"], 3)
        self.assertEqual(self.backend.count("s1"), 3)

    def test_malformed_line_keeps_connection(self):
        channel, _ = self.connect()
        channel.send_raw(b"{oops\n")
        channel.send_raw(encode_alert(record(1)))
        (ack,) = self.acks(channel, 1)
        self.assertEqual(ack["seq"], 1)
        self.assertEqual(self.server.malformed_count("s1"), 1)

    def test_alert_for_other_sensor_skipped(self):
        channel, _ = self.connect()
        channel.send_raw(encode_alert(record(1, sensor_id="s2")))
        channel.send_raw(encode_alert(record(1)))
        self.acks(channel, 1)
        self.assertEqual(self.backend.count("s2"), 0)
        self.assertEqual(self.server.malformed_count("s1"), 1)

    def test_protocol_mismatch_closes(self):
        channel, reply = self.connect(proto_ver=PROTOCOL_VERSION + 1)
        self.assertEqual(reply["type"], MessageType.ERROR)
        self.assertIn("mismatch", reply["message"])
        channel.sock.settimeout(5.0)
        self.assertEqual(channel.sock.recv(1), b"")

    def test_resume_reports_contiguous_seq(self):
        channel, _ = self.connect()
        for seq in (1, 2, 4):
            channel.send_raw(encode_alert(record(seq)))
        self.acks(channel, 3)
        _, reply = self.connect()
        self.assertEqual(reply["seq"], 2)

    def test_push_offered_until_acked(self):
        push = RulePush.create(2, OPERATE_ONLY.format(v=2), VARIABLES)
        self.backend.pushes["s1"] = push
        channel, _ = self.connect()
        offered = decode_message(channel.read_line(5.0))
        self.assertEqual(offered["type"], MessageType.RULE_PUSH)
        self.assertEqual(RulePush.from_message(offered), push)
        channel.send({"type": MessageType.RULE_ACK, "version": 2, "status": RuleAckStatus.APPLIED})
        self.assertTrue(wait_until(lambda: self.backend.rule_acks == [("s1", 2, RuleAckStatus.APPLIED)]))


class AuthenticatedServerTests(SimpleTestCase):
    def test_token_required(self):
        server = MasterServer(("127.0.0.1", 0), MemoryBackend(), secret="s3cret", poll_interval=0.05)
        server.start()
        try:
            for token, expected in (("", MessageType.ERROR), (issue_token("s1", "s3cret"), MessageType.HELLO_ACK)):
                with self.subTest(expected=expected):
                    channel = LineChannel(socket.create_connection(("127.0.0.1", server.port)))
                    channel.send(hello_message("s1", 1, token))
                    self.assertEqual(decode_message(channel.read_line(5.0))["type"], expected)
                    channel.close()
        finally:
            server.stop()


class SensorUplinkTests(SimpleTestCase):
    def setUp(self):
        self.backend = MemoryBackend()
        self.server = MasterServer(("127.0.0.1", 0), self.backend, poll_interval=0.05)
        self.server.start()

    def tearDown(self):
        self.server.stop()

    def alert(self, ts):
        return Alert(
            timestamp=ts, gid=0, sid=3, msg="operate", src_ip="10.0.0.66", src_port=51066,
            dst_ip="10.0.0.2", dst_port=20000, protocol="tcp", position=0, function_code=4, rule_version=1,
        )

    def test_spooled_alerts_delivered_once(self):
        uplink = SensorUplink("s1", ("127.0.0.1", self.server.port), poll_interval=0.05, reconnect_delay=0.1)
        for ts in range(40):
            uplink.enqueue(self.alert(ts))
        uplink.start()
        try:
            self.assertTrue(uplink.flush(10.0))
            for ts in range(40, 60):
                uplink.enqueue(self.alert(ts))
            self.assertTrue(uplink.flush(10.0))
        finally:
            uplink.stop()
        self.assertEqual(self.backend.count("s1"), 60)
        self.assertEqual(sorted(self.backend.records["s1"]), list(range(1, 61)))

    def test_push_reaches_sensor(self):
        variables = parse_variables(f"{k}={v}" for k, v in VARIABLES.items())
        node = SensorNode(
            SensorConfig(sensor_id="s1", master_host="127.0.0.1", master_port=self.server.port),
            ruleset=compile_ruleset(OPERATE_ONLY.format(v=1), variables, version=1),
        )
        node.uplink.poll_interval = 0.05
        self.backend.pushes["s1"] = RulePush.create(2, OPERATE_ONLY.format(v=2), VARIABLES)
        node.start()
        try:
            self.assertTrue(wait_until(lambda: self.backend.rule_acks == [("s1", 2, RuleAckStatus.APPLIED)]))
            self.assertEqual(node.rule_version, 2)
        finally:
            node.stop()

    def test_unreachable_master_keeps_spool(self):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        uplink = SensorUplink("s1", ("127.0.0.1", port), reconnect_delay=0.05)
        uplink.enqueue(self.alert(1))
        uplink.start()
        try:
            self.assertFalse(uplink.flush(0.3))
            self.assertEqual(len(uplink.spool), 1)
        finally:
            uplink.stop()
