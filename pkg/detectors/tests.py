import random
from ipaddress import ip_network

from django.test import SimpleTestCase
from scapy.layers.inet import IP, TCP
from scapy.layers.l2 import Ether
from scapy.packet import Raw

from dnp3 import build_frame, encode_frame, parse_frame
from dnp3.constants import FunctionCode
from pipeline import CaptureRecord, decode_packet, run_pipeline
from pipeline.flows import FlowVerdict
from rules import compile_ruleset, parse_variables
from rules.addresses import NetworkSet
from synth import AttackKind, ScenarioConfig, corrupt_crc, dnp3_record_indexes, synth_attack_parts, synth_benign
from synth.constants import CROB
from synth.session import merge_records

from detectors import (
    DetectorConfig,
    DetectorSid,
    DetectorSuite,
    SboKeyMode,
    SboState,
    check_frame_crc,
    check_tcp_sequence,
    screen_critical,
    track_select_operate,
)

MASTER = "10.0.0.1"
ATTACKER = "10.0.0.66"
MASTERS = NetworkSet((ip_network(MASTER),))
SECOND = 1_000_000
SMALL = ScenarioConfig(count=10)
SUBSTATION_TEXT = "\n".join([
    'alert tcp !$SRC any -> $DST any (content:" 04 "; offset:12; depth:1; msg:"DNP3 operate from Unknow source"; sid:3;)',
    'alert tcp !$SRC any -> $DST any (flow: not_established; msg:"Unknown flow"; sid:5;)',
    'alert tcp !$SRC any -> $DST any (content:" 05 64 "; threshold: type both, track by src, count 5, seconds 10; sid:9;)',
    'alert tcp !$SRC any -> $DST any (msg:"DNP3-Bad-CRC"; sid:1; gid:145; metadata: rule-type preproc;)',
    'alert tcp !$SRC any -> $DST any (msg:"DNP3-Invalid sequence no"; sid:3; gid:145; metadata: rule-type preproc;)',
]) + "\n"
VARIABLES = parse_variables(["SRC=10.0.0.1,10.0.0.2", "DST=10.0.0.2"])


def request(code, payload=b"", destination=10):
    return build_frame(destination, 1, code, payload)


def suite():
    return DetectorSuite(DetectorConfig(authorized_masters=(MASTER,)))


def detector_only():
    return compile_ruleset("", {})


class CrcCheckTests(SimpleTestCase):
    def test_clean_frame(self):
        frame = parse_frame(encode_frame(request(FunctionCode.READ)))
        self.assertIsNone(check_frame_crc(frame))

    def test_corrupted_header(self):
        octets = bytearray(encode_frame(request(FunctionCode.READ)))
        octets[5] ^= 0x01
        alert = check_frame_crc(parse_frame(bytes(octets)))
        self.assertEqual(alert.rule_id, (145, DetectorSid.BAD_CRC))
        self.assertEqual(alert.msg, "DNP3-Bad-CRC")

    def test_corrupted_body_block(self):
        octets = bytearray(encode_frame(request(FunctionCode.OPERATE, CROB)))
        octets[12] ^= 0x80
        frame = parse_frame(bytes(octets))
        self.assertTrue(frame.header_crc_valid)
        self.assertFalse(frame.body_crc_valid)
        self.assertEqual(check_frame_crc(frame).sid, DetectorSid.BAD_CRC)

    def test_single_bit_flips_always_detected(self):
        rng = random.Random(3)
        codes = [FunctionCode.READ, FunctionCode.SELECT, FunctionCode.OPERATE, FunctionCode.COLD_RESTART]
        for _ in range(1000):
            payload = bytes(rng.randrange(256) for _ in range(rng.randrange(60)))
            frame = build_frame(rng.randrange(1 << 16), rng.randrange(1 << 16), rng.choice(codes), payload)
            octets = bytearray(encode_frame(frame))
            self.assertIsNone(check_frame_crc(parse_frame(bytes(octets))))
            # start octets and length stay intact so the frame still parses
            octets[rng.randrange(3, len(octets))] ^= 1 << rng.randrange(8)
            self.assertIsNotNone(check_frame_crc(parse_frame(bytes(octets))))

    def test_corrupted_capture_raises_one_alert(self):
        records = synth_benign(SMALL)
        index = dnp3_record_indexes(records)[4]
        result = run_pipeline(corrupt_crc(records, index), detector_only(), detectors=suite())
        self.assertEqual([a.rule_id for a in result.alerts], [(145, DetectorSid.BAD_CRC)])
        self.assertEqual(result.alerts[0].timestamp, records[index].timestamp)


class SequenceCheckTests(SimpleTestCase):
    def test_in_window(self):
        self.assertIsNone(check_tcp_sequence(FlowVerdict(established=True)))

    def test_anomaly(self):
        alert = check_tcp_sequence(FlowVerdict(established=True, seq_anomaly=True))
        self.assertEqual(alert.rule_id, (145, DetectorSid.INVALID_SEQUENCE))
        self.assertEqual(alert.msg, "DNP3-Invalid sequence no")

    def test_unestablished_flow(self):
        self.assertIsNone(check_tcp_sequence(FlowVerdict(new_flow=True)))


class SelectOperateTests(SimpleTestCase):
    def setUp(self):
        self.state = SboState(authorized_masters=MASTERS, select_timeout=10.0)

    def track(self, code, at, payload=CROB, src=MASTER, destination=10):
        return track_select_operate(self.state, request(code, payload, destination), src, at)

    def test_select_then_operate(self):
        self.assertIsNone(self.track(FunctionCode.SELECT, 0))
        self.assertIsNone(self.track(FunctionCode.OPERATE, 2 * SECOND))
        self.assertEqual(self.state.consumed, 1)
        self.assertEqual(self.state.pending, {})

    def test_operate_alone(self):
        alert = self.track(FunctionCode.OPERATE, 0)
        self.assertEqual(alert.sid, DetectorSid.OPERATE_WITHOUT_SELECT)
        self.assertEqual(alert.msg, "Operate without Select")

    def test_select_expires(self):
        self.track(FunctionCode.SELECT, 0)
        alert = self.track(FunctionCode.OPERATE, 11 * SECOND)
        self.assertEqual(alert.sid, DetectorSid.OPERATE_WITHOUT_SELECT)
        self.assertEqual(self.state.expired, 1)

    def test_operate_consumes_its_select(self):
        self.track(FunctionCode.SELECT, 0)
        self.track(FunctionCode.OPERATE, SECOND)
        self.assertIsNotNone(self.track(FunctionCode.OPERATE, 2 * SECOND))

    def test_digest_key_requires_same_points(self):
        self.track(FunctionCode.SELECT, 0)
        other = CROB[:-1] + b"\x01"
        self.assertIsNotNone(self.track(FunctionCode.OPERATE, SECOND, payload=other))

    def test_address_key_ignores_points(self):
        self.state = SboState(authorized_masters=MASTERS, key_mode=SboKeyMode.ADDRESSES)
        self.track(FunctionCode.SELECT, 0)
        self.assertIsNone(self.track(FunctionCode.OPERATE, SECOND, payload=CROB[:-1] + b"\x01"))

    def test_key_includes_source_and_destination(self):
        self.track(FunctionCode.SELECT, 0)
        self.assertIsNotNone(self.track(FunctionCode.OPERATE, SECOND, src=ATTACKER))
        self.assertIsNotNone(self.track(FunctionCode.OPERATE, SECOND, destination=11))

    def test_direct_operate_screening(self):
        alert = self.track(FunctionCode.DIRECT_OPERATE, 0, src=ATTACKER)
        self.assertEqual(alert.sid, DetectorSid.UNAUTHORIZED_DIRECT_OPERATE)
        self.assertIsNotNone(self.track(FunctionCode.DIRECT_OPERATE_NR, 0, src=ATTACKER))
        self.assertIsNone(self.track(FunctionCode.DIRECT_OPERATE, 0))

    def test_other_codes_ignored(self):
        self.assertIsNone(self.track(FunctionCode.READ, 0, payload=b"", src=ATTACKER))

    def test_conservation(self):
        rng = random.Random(11)
        payloads = [CROB, CROB[:-1] + b"\x01", CROB[:-1] + b"\x02"]
        clock = 0
        for _ in range(2000):
            clock += rng.randrange(4 * SECOND)
            code = rng.choice([FunctionCode.SELECT, FunctionCode.OPERATE])
            self.track(code, clock, payload=rng.choice(payloads), destination=rng.choice([10, 11]))
            state = self.state
            self.assertEqual(state.selects - state.expired - state.consumed, len(state.pending))


class CriticalScreenTests(SimpleTestCase):
    def test_broadcast_operate(self):
        alert = screen_critical(request(FunctionCode.OPERATE, CROB, destination=0xFFFF), MASTER, MASTERS)
        self.assertEqual(alert.sid, DetectorSid.BROADCAST_CRITICAL)
        self.assertEqual(alert.msg, "Broadcast critical request")

    def test_broadcast_read_is_allowed(self):
        self.assertIsNone(screen_critical(request(FunctionCode.READ, destination=0xFFFF), MASTER, MASTERS))

    def test_master_only_functions(self):
        expected = {
            FunctionCode.DISABLE_UNSOLICITED: "Disable unsolicited from unknown source",
            FunctionCode.STOP_APPLICATION: "Stop application from unknown source",
            FunctionCode.COLD_RESTART: "Cold restart from unknown source",
        }
        for code, msg in expected.items():
            with self.subTest(code=code):
                self.assertEqual(screen_critical(request(code), ATTACKER, MASTERS).msg, msg)
                self.assertIsNone(screen_critical(request(code), MASTER, MASTERS))

    def test_unicast_read(self):
        self.assertIsNone(screen_critical(request(FunctionCode.READ), ATTACKER, MASTERS))

    def test_custom_sets(self):
        frame = request(FunctionCode.READ, destination=0xFFF0)
        alert = screen_critical(frame, MASTER, MASTERS, critical={FunctionCode.READ}, broadcast={0xFFF0})
        self.assertEqual(alert.sid, DetectorSid.BROADCAST_CRITICAL)


class DetectorSuiteTests(SimpleTestCase):
    def test_benign_capture_is_silent(self):
        for seed in range(3):
            records = synth_benign(ScenarioConfig(count=20, seed=seed))
            self.assertEqual(run_pipeline(records, detector_only(), detectors=suite()).alerts, [])

    def test_duplicate_findings_collapse(self):
        frame = encode_frame(request(FunctionCode.OPERATE, CROB))
        octets = bytearray(frame)
        octets[5] ^= 0x01
        pkt = (
            Ether(src="02:00:0a:00:00:42", dst="02:00:0a:00:00:02")
            / IP(src=ATTACKER, dst="10.0.0.2")
            / TCP(sport=40000, dport=20000, flags="PA", seq=1, ack=1)
            / Raw(load=bytes(octets) * 2)
        )
        parsed = decode_packet(CaptureRecord(timestamp=0, data=bytes(pkt)))
        found = suite().run(parsed, FlowVerdict(), 0)
        self.assertEqual(
            sorted(alert.sid for alert in found),
            [DetectorSid.BAD_CRC, DetectorSid.OPERATE_WITHOUT_SELECT],
        )


class CoverageTests(SimpleTestCase):
    """Every attack scenario is flagged on the frames the attacker injected."""

    EXPECTED = {
        AttackKind.SELECT_OPERATE_REPLAY: (1, 3),
        AttackKind.DIRECT_OPERATE: (145, DetectorSid.UNAUTHORIZED_DIRECT_OPERATE),
        AttackKind.BROADCAST_REQUEST: (145, DetectorSid.BROADCAST_CRITICAL),
        AttackKind.DISABLE_UNSOLICITED: (145, DetectorSid.DISABLE_UNSOLICITED),
        AttackKind.STOP_APPLICATION: (145, DetectorSid.STOP_APPLICATION),
        AttackKind.COLD_RESTART: (145, DetectorSid.COLD_RESTART),
    }

    def test_attack_matrix(self):
        ruleset = compile_ruleset(SUBSTATION_TEXT, VARIABLES)
        for kind, rule_id in self.EXPECTED.items():
            with self.subTest(kind=kind):
                background, injected = synth_attack_parts(kind, SMALL)
                result = run_pipeline(merge_records(background, injected), ruleset, detectors=suite(), evaluate_all=True)
                injected_times = {record.timestamp for record in injected}
                flagged = {a.rule_id for a in result.alerts if a.timestamp in injected_times}
                self.assertIn(rule_id, flagged)
                self.assertFalse([a for a in result.alerts if a.timestamp not in injected_times])

    def test_spoofed_replay_breaks_sequence(self):
        config = ScenarioConfig(count=10, spoof_source=True)
        background, injected = synth_attack_parts(AttackKind.SELECT_OPERATE_REPLAY, config)
        result = run_pipeline(merge_records(background, injected), detector_only(), detectors=suite())
        self.assertIn((145, DetectorSid.INVALID_SEQUENCE), {a.rule_id for a in result.alerts})
        self.assertTrue(all(a.timestamp in {r.timestamp for r in injected} for a in result.alerts))
