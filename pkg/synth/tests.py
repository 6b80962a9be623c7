import os
import tempfile

from django.test import SimpleTestCase

from dnp3.constants import FunctionCode
from pipeline import decode_packet, run_pipeline
from pipeline.decoder import Protocol
from rules import compile_ruleset, parse_variables
from synth import (
    SCENARIOS,
    AttackKind,
    CrcSite,
    FloodKind,
    IndexNotDnp3,
    ScenarioConfig,
    SynthError,
    UnknownScenario,
    corrupt_crc,
    dnp3_record_indexes,
    synth_attack_parts,
    synth_benign,
    synth_flood,
    synth_ordering,
    synth_scenario,
)

FLOOD_RULES = 'alert tcp !$SRC any -> $DST any (content:" 05 64 "; threshold: type both, track by src, count 5, seconds 10; sid:9;)\n'
FLOW_RULES = 'alert tcp !$SRC any -> $DST any (flow: not_established; msg:"Unknown flow"; sid:5;)\n'
VARIABLES = parse_variables(["SRC=10.0.0.1,10.0.0.2", "DST=10.0.0.2"])
SECOND = 1_000_000


def decoded(records):
    return [decode_packet(record) for record in records]


def requests(records):
    return [pkt for pkt in decoded(records) if getattr(pkt, "dnp3", None) is not None and pkt.dnp3.is_request]


class BenignTests(SimpleTestCase):
    def test_polls_at_rate(self):
        config = ScenarioConfig(count=100, rate=1.0)
        records = synth_benign(config)
        self.assertEqual(len(records), 3 + 2 * 100 + 3)
        polls = requests(records)
        self.assertEqual(len(polls), 100)
        self.assertTrue(all(pkt.dnp3.function_code == FunctionCode.READ for pkt in polls))
        self.assertEqual(polls[-1].timestamp - polls[0].timestamp, 99 * SECOND)
        times = [record.timestamp for record in records]
        self.assertEqual(times, sorted(times))

    def test_faster_rate(self):
        polls = requests(synth_benign(ScenarioConfig(count=5, rate=4.0)))
        self.assertEqual(polls[1].timestamp - polls[0].timestamp, SECOND // 4)

    def test_zero_count_is_handshake_and_teardown(self):
        records = synth_benign(ScenarioConfig(count=0))
        self.assertEqual(len(records), 6)
        self.assertEqual(dnp3_record_indexes(records), [])

    def test_deterministic(self):
        config = ScenarioConfig(count=20, seed=4)
        self.assertEqual(synth_benign(config), synth_benign(config))
        self.assertNotEqual(synth_benign(config), synth_benign(ScenarioConfig(count=20, seed=5)))

    def test_responses_carry_master_address(self):
        responses = [pkt for pkt in decoded(synth_benign(ScenarioConfig(count=3))) if pkt.dnp3 and not pkt.dnp3.is_request]
        self.assertEqual(len(responses), 3)
        self.assertTrue(all(pkt.dnp3.link.destination == 1 for pkt in responses))


class AttackTests(SimpleTestCase):
    config = ScenarioConfig(count=10)

    def injected_requests(self, kind):
        _, injected = synth_attack_parts(kind, self.config)
        return requests(injected)

    def test_broadcast_destination(self):
        frames = self.injected_requests(AttackKind.BROADCAST_REQUEST)
        self.assertEqual(len(frames), 1)
        self.assertEqual(frames[0].dnp3.link.destination, 0xFFFF)
        self.assertEqual(frames[0].dnp3.function_code, FunctionCode.OPERATE)

    def test_function_code_at_offset_12(self):
        expected = {
            AttackKind.DIRECT_OPERATE: 0x05,
            AttackKind.DISABLE_UNSOLICITED: 0x15,
            AttackKind.STOP_APPLICATION: 0x12,
            AttackKind.COLD_RESTART: 0x0D,
        }
        for kind, code in expected.items():
            with self.subTest(kind=kind):
                (pkt,) = self.injected_requests(kind)
                self.assertEqual(pkt.tcp_payload[12], code)
                self.assertEqual(pkt.src_ip, self.config.attacker_ip)

    def test_replay_sends_select_then_operate(self):
        codes = [pkt.dnp3.function_code for pkt in self.injected_requests(AttackKind.SELECT_OPERATE_REPLAY)]
        self.assertEqual(codes, [FunctionCode.SELECT, FunctionCode.OPERATE])

    def test_spoofed_replay_reuses_master_segments(self):
        config = ScenarioConfig(count=10, spoof_source=True)
        background, injected = synth_attack_parts(AttackKind.SELECT_OPERATE_REPLAY, config)
        self.assertEqual(len(injected), 2)
        background_data = {record.data for record in background}
        self.assertTrue(all(record.data in background_data for record in injected))

    def test_minimal_injection(self):
        benign = synth_benign(self.config)
        for kind in AttackKind.ALL:
            if kind == AttackKind.SELECT_OPERATE_REPLAY:
                continue
            with self.subTest(kind=kind):
                background, injected = synth_attack_parts(kind, self.config)
                self.assertEqual(background, benign)
                self.assertEqual(len(requests(injected)), 1)
                for pkt in decoded(injected):
                    self.assertIn(self.config.attacker_ip, (pkt.src_ip, pkt.dst_ip))

    def test_injection_point(self):
        config = ScenarioConfig(count=10, attack_at=2)
        _, injected = synth_attack_parts(AttackKind.COLD_RESTART, config)
        self.assertGreater(injected[0].timestamp, config.poll_time(2))
        self.assertLess(injected[0].timestamp, config.poll_time(3))

    def test_unknown_kind(self):
        with self.assertRaises(UnknownScenario):
            synth_attack_parts("ping_of_death", self.config)


class FloodTests(SimpleTestCase):
    def flood_alerts(self, flood_count):
        config = ScenarioConfig(count=10, flood_count=flood_count)
        records = synth_flood(FloodKind.DNP3_FLOOD, config)
        ruleset = compile_ruleset(FLOOD_RULES, VARIABLES)
        return [alert for alert in run_pipeline(records, ruleset).alerts if alert.sid == 9]

    def test_flood_of_five_fires_once(self):
        self.assertEqual(len(self.flood_alerts(5)), 1)

    def test_flood_below_count_is_silent(self):
        self.assertEqual(self.flood_alerts(4), [])

    def test_flood_fires_once_per_window(self):
        self.assertEqual(len(self.flood_alerts(10)), 1)

    def test_syn_flood_is_unestablished(self):
        config = ScenarioConfig(count=5, flood_count=7)
        records = synth_flood(FloodKind.SYN_FLOOD, config)
        attack = [pkt for pkt in decoded(records) if pkt.src_ip == config.attacker_ip]
        self.assertEqual(len({pkt.src_port for pkt in attack}), 7)
        alerts = run_pipeline(records, compile_ruleset(FLOW_RULES, VARIABLES)).alerts
        self.assertEqual(len(alerts), 7)

    def test_port_scan_probes_distinct_ports(self):
        config = ScenarioConfig(count=5, flood_count=20)
        records = synth_flood(FloodKind.PORT_SCAN, config)
        ports = [pkt.dst_port for pkt in decoded(records) if pkt.src_ip == config.attacker_ip]
        self.assertEqual(ports, list(range(1, 21)))


class CorruptTests(SimpleTestCase):
    def setUp(self):
        self.records = synth_benign(ScenarioConfig(count=5))
        self.index = dnp3_record_indexes(self.records)[0]

    def test_flip_twice_restores(self):
        for site in CrcSite.ALL:
            with self.subTest(site=site):
                once = corrupt_crc(self.records, self.index, site=site)
                twice = corrupt_crc(once, self.index, site=site)
                self.assertNotEqual(once[self.index], self.records[self.index])
                self.assertEqual(twice, self.records)

    def test_only_target_changes(self):
        corrupted = corrupt_crc(self.records, self.index)
        changed = [i for i, (a, b) in enumerate(zip(self.records, corrupted)) if a != b]
        self.assertEqual(changed, [self.index])
        before = decode_packet(self.records[self.index])
        after = decode_packet(corrupted[self.index])
        self.assertEqual(len(before.tcp_payload), len(after.tcp_payload))
        self.assertFalse(after.dnp3.header_crc_valid)

    def test_body_site(self):
        corrupted = corrupt_crc(self.records, self.index, site=CrcSite.BODY, octet=1)
        frame = decode_packet(corrupted[self.index]).dnp3
        self.assertTrue(frame.header_crc_valid)
        self.assertFalse(frame.body_crc_valid)

    def test_body_octet_outside_first_block(self):
        with self.assertRaises(SynthError):
            corrupt_crc(self.records, self.index, site=CrcSite.BODY, octet=40)

    def test_non_dnp3_record(self):
        with self.assertRaises(IndexNotDnp3):
            corrupt_crc(self.records, 0)
        with self.assertRaises(IndexNotDnp3):
            corrupt_crc(self.records, len(self.records))


class OrderingCaptureTests(SimpleTestCase):
    def test_layout(self):
        config = ScenarioConfig(flood_count=5)
        packets = decoded(synth_ordering(config))
        self.assertEqual(len(packets), 1 + 3 + 1 + 5)
        self.assertEqual(packets[0].protocol, Protocol.ICMP)
        self.assertEqual(packets[1].tcp_flags & 0x12, 0x02)
        codes = [pkt.dnp3.function_code for pkt in packets if pkt.dnp3 is not None]
        self.assertEqual(codes, [FunctionCode.OPERATE] + [FunctionCode.READ] * 5)
        self.assertTrue(all(pkt.src_ip in (config.attacker_ip, config.outstation_ip) for pkt in packets))


class ScenarioConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "scenario.env")

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        with open(self.path, "w") as handle:
            handle.write(text)

    def test_file_values(self):
        self.write("# flood run\nRATE=2\ncount=5\nspoof_source=yes\nattack_at=none\nmaster_ip=192.168.1.5\nflood_seconds=2.5\n")
        config = ScenarioConfig.from_file(self.path)
        self.assertEqual(config.rate, 2.0)
        self.assertEqual(config.count, 5)
        self.assertTrue(config.spoof_source)
        self.assertIsNone(config.attack_at)
        self.assertEqual(config.master_ip, "192.168.1.5")
        self.assertEqual(config.flood_seconds, 2.5)
        self.assertEqual(config.interval_us, SECOND // 2)

    def test_unknown_keys_are_ignored(self):
        self.write("colour=blue\ncount=3\n")
        self.assertEqual(ScenarioConfig.from_file(self.path).count, 3)

    def test_bad_values(self):
        for text in ("count=many\n", "rate=0\n", "flood_count=0\n"):
            with self.subTest(text=text):
                self.write(text)
                with self.assertRaises(SynthError):
                    ScenarioConfig.from_file(self.path)

    def test_missing_file(self):
        with self.assertRaises(SynthError):
            ScenarioConfig.from_file(os.path.join(self.tmp.name, "absent.env"))

    def test_middle_injection_by_default(self):
        self.assertEqual(ScenarioConfig(count=10).injection_cycle, 5)
        self.assertEqual(ScenarioConfig(count=10, attack_at=50).injection_cycle, 10)


class DispatchTests(SimpleTestCase):
    def test_every_scenario_builds(self):
        config = ScenarioConfig(count=4)
        for kind in SCENARIOS:
            with self.subTest(kind=kind):
                self.assertTrue(synth_scenario(kind, config))

    def test_unknown(self):
        with self.assertRaises(UnknownScenario):
            synth_scenario("nope", ScenarioConfig())
