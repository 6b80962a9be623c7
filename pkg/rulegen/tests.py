import re
from collections import Counter

from django.test import SimpleTestCase
from scapy.layers.inet import IP, TCP
from scapy.layers.l2 import Ether
from scapy.packet import Raw

from detectors import DetectorSuite
from dnp3 import build_frame, encode_frame
from dnp3.constants import FunctionCode
from pipeline import CaptureRecord, decode_packet, run_pipeline
from rules import compile_rules, compile_ruleset, parse_rule
from rules.exceptions import RuleSetCompileError
from synth import AttackKind, ScenarioConfig, synth_attack_parts, synth_benign
from synth.session import merge_records

from rulegen import (
    FIRST_GENERATED_SID,
    KNOWN,
    GeneratorConfig,
    NoDnp3Traffic,
    PatternKind,
    RateTracker,
    classify_observation,
    generate_ruleset,
    generated_variables,
    learn_baseline,
    merge_repository,
    priority_class,
    render_generated,
)

SECOND = 1_000_000
MASTER = "10.0.0.1"
OUTSTATION = "10.0.0.2"
CHANGELOG_LINE = re.compile(r"^(ADD|SKIP) \d+ \S")


def packet(src, dst, sport, dport, octets, ts=0):
    pkt = (
        Ether(src="02:00:0a:00:00:01", dst="02:00:0a:00:00:02")
        / IP(src=src, dst=dst)
        / TCP(sport=sport, dport=dport, flags="PA", seq=1, ack=1)
        / Raw(load=octets)
    )
    return decode_packet(CaptureRecord(timestamp=ts, data=bytes(pkt)))


def request(code, destination=10, source=1):
    return encode_frame(build_frame(destination, source, code))


def generate(records, config=None):
    profile = learn_baseline(records)
    config = config or GeneratorConfig()
    generated = generate_ruleset(profile, config, generated_at=0)
    ruleset = compile_rules((g.rule for g in generated), generated_variables(profile))
    return profile, generated, ruleset, DetectorSuite(config.detector_config(profile))


class BaselineTests(SimpleTestCase):
    def test_polls_at_one_hertz(self):
        profile = learn_baseline(synth_benign(ScenarioConfig(count=100)))
        self.assertEqual(profile.function_matrix, {(MASTER, 10): Counter({FunctionCode.READ: 100})})
        stats = profile.timing_stats[(MASTER, 10, FunctionCode.READ)]
        self.assertEqual(stats.count, 100)
        self.assertAlmostEqual(stats.mean_interval, 1.0)
        self.assertAlmostEqual(stats.std_interval, 0.0)
        self.assertEqual(stats.max_burst, 10)
        self.assertEqual(profile.masters, {MASTER})
        self.assertEqual(profile.outstations, {OUTSTATION})
        self.assertEqual(profile.ports, {20000})
        self.assertEqual(profile.frames, 200)

    def test_single_request(self):
        profile = learn_baseline(synth_benign(ScenarioConfig(count=1)))
        stats = profile.timing_stats[(MASTER, 10, FunctionCode.READ)]
        self.assertEqual((stats.count, stats.mean_interval, stats.std_interval, stats.max_burst), (1, 0.0, 0.0, 1))

    def test_timing_keys_follow_function_matrix(self):
        background, _ = synth_attack_parts(AttackKind.SELECT_OPERATE_REPLAY, ScenarioConfig(count=10))
        profile = learn_baseline(background)
        for master_ip, address, code in profile.timing_stats:
            self.assertGreaterEqual(profile.function_matrix[(master_ip, address)][code], 1)
        self.assertIn(FunctionCode.SELECT, profile.functions_for(MASTER, 10))

    def test_no_dnp3(self):
        with self.assertRaises(NoDnp3Traffic):
            learn_baseline([])
        with self.assertRaises(NoDnp3Traffic):
            learn_baseline(synth_benign(ScenarioConfig(count=0)))

    def test_deterministic_capture_id(self):
        records = synth_benign(ScenarioConfig(count=5))
        self.assertEqual(learn_baseline(records).capture_id, learn_baseline(records).capture_id)
        self.assertEqual(learn_baseline(records, capture_id="site-a").capture_id, "site-a")


class ClassifyTests(SimpleTestCase):
    def setUp(self):
        self.profile = learn_baseline(synth_benign(ScenarioConfig(count=100)))

    def test_baseline_poll_is_known(self):
        pkt = packet(MASTER, OUTSTATION, 50000, 20000, request(FunctionCode.READ))
        self.assertIs(classify_observation(self.profile, pkt), KNOWN)

    def test_response_is_known(self):
        octets = encode_frame(build_frame(1, 10, FunctionCode.RESPONSE, request=False))
        pkt = packet(OUTSTATION, MASTER, 20000, 50000, octets)
        self.assertIs(classify_observation(self.profile, pkt), KNOWN)

    def test_unknown_source(self):
        pkt = packet("10.0.0.66", OUTSTATION, 51066, 20000, request(FunctionCode.OPERATE))
        pattern = classify_observation(self.profile, pkt)
        self.assertEqual(pattern.kind, PatternKind.PAYLOAD_PORT)
        self.assertEqual(pattern.src_ip, "10.0.0.66")

    def test_unknown_port(self):
        pkt = packet(MASTER, OUTSTATION, 50000, 502, b"\x00\x01")
        self.assertEqual(classify_observation(self.profile, pkt).kind, PatternKind.PAYLOAD_PORT)

    def test_request_from_outstation_side(self):
        pkt = packet(OUTSTATION, MASTER, 20000, 50000, request(FunctionCode.READ, destination=1, source=10))
        self.assertEqual(classify_observation(self.profile, pkt).kind, PatternKind.FLOW_DIRECTION)

    def test_new_function_codes(self):
        operate = packet(MASTER, OUTSTATION, 50000, 20000, request(FunctionCode.OPERATE))
        pattern = classify_observation(self.profile, operate)
        self.assertEqual(pattern.kind, PatternKind.CRITICAL_COMMAND)
        self.assertEqual(pattern.function_code, FunctionCode.OPERATE)
        write = packet(MASTER, OUTSTATION, 50000, 20000, request(FunctionCode.WRITE))
        self.assertEqual(classify_observation(self.profile, write).kind, PatternKind.PAYLOAD_PORT)

    def test_burst_above_learned_rate(self):
        rates = RateTracker(window=self.profile.window)
        fast = synth_benign(ScenarioConfig(count=100, rate=50.0))
        polls = [pkt for pkt in map(decode_packet, fast) if pkt.dnp3 is not None and pkt.dnp3.is_request]
        kinds = [classify_observation(self.profile, pkt, rates=rates) for pkt in polls]
        self.assertTrue(all(kind is KNOWN for kind in kinds[:10]))
        burst = [kind for kind in kinds if kind is not KNOWN]
        self.assertTrue(burst)
        self.assertEqual(burst[0].kind, PatternKind.RATE)
        self.assertGreaterEqual(burst[0].evidence_dict()["window_count"], 11)

    def test_baseline_rate_stays_known(self):
        rates = RateTracker(window=self.profile.window)
        for pkt in map(decode_packet, synth_benign(ScenarioConfig(count=100))):
            self.assertIs(classify_observation(self.profile, pkt, rates=rates), KNOWN)


class GenerateTests(SimpleTestCase):
    def setUp(self):
        self.profile = learn_baseline(synth_benign(ScenarioConfig(count=30)))

    def test_critical_rules_come_first(self):
        generated = generate_ruleset(self.profile)
        critical = generated[:len(GeneratorConfig().critical_functions)]
        self.assertTrue(all(g.kind == PatternKind.CRITICAL_COMMAND for g in critical))
        operate = [g.rule for g in critical if g.rule.contents[0].pattern == b"\x04"]
        self.assertEqual(len(operate), 1)
        self.assertEqual(operate[0].header.render(), "alert tcp !$MASTERS any -> $OUTSTATIONS 20000")
        self.assertEqual((operate[0].contents[0].offset, operate[0].contents[0].depth), (12, 1))

    def test_priority_order_and_sids(self):
        generated = generate_ruleset(self.profile)
        ranks = [PatternKind.PRIORITY.index(g.kind) for g in generated]
        self.assertEqual(ranks, sorted(ranks))
        self.assertEqual([g.rule.sid for g in generated], list(range(FIRST_GENERATED_SID, FIRST_GENERATED_SID + len(generated))))
        self.assertEqual({priority_class(g.rule) for g in generated}, set(PatternKind.ALL))

    def test_rate_rule_from_max_burst(self):
        profile = learn_baseline(synth_benign(ScenarioConfig(count=3)))
        (rate_rule,) = [
            g.rule for g in generate_ruleset(profile)
            if g.kind == PatternKind.RATE and g.pattern.function_code == FunctionCode.READ
        ]
        self.assertEqual((rate_rule.threshold.count, rate_rule.threshold.seconds), (4, 10))
        self.assertEqual(rate_rule.header.render(), f"alert tcp {MASTER} any -> $OUTSTATIONS 20000")
        self.assertEqual(rate_rule.contents[0].pattern, b"\x0a\x00")

    def test_without_critical_codes(self):
        generated = generate_ruleset(self.profile, GeneratorConfig(critical_functions=frozenset()))
        kinds = [g.kind for g in generated]
        self.assertNotIn(PatternKind.CRITICAL_COMMAND, kinds)
        self.assertEqual(kinds[0], PatternKind.FLOW_DIRECTION)
        self.assertEqual(kinds[-1], PatternKind.RATE)

    def test_deterministic_text(self):
        first = render_generated(generate_ruleset(self.profile, generated_at=1))
        second = render_generated(generate_ruleset(learn_baseline(synth_benign(ScenarioConfig(count=30))), generated_at=2))
        self.assertEqual(first, second)
        self.assertEqual(compile_ruleset(first, generated_variables(self.profile)).render().strip(), first.strip())

    def test_baseline_silence(self):
        configs = [
            ScenarioConfig(count=40),
            ScenarioConfig(count=25, rate=4.0, seed=2),
            ScenarioConfig(count=15, rate=0.5, seed=7),
        ]
        for config in configs:
            with self.subTest(config=config):
                records = synth_benign(config)
                _, _, ruleset, detectors = generate(records)
                self.assertEqual(run_pipeline(records, ruleset, detectors=detectors).alerts, [])

    def test_silence_with_operator_commands(self):
        background, _ = synth_attack_parts(AttackKind.SELECT_OPERATE_REPLAY, ScenarioConfig(count=20))
        _, _, ruleset, detectors = generate(background)
        self.assertEqual(run_pipeline(background, ruleset, detectors=detectors).alerts, [])

    def test_attacks_are_flagged(self):
        config = ScenarioConfig(count=20)
        _, _, ruleset, _ = generate(synth_benign(config))
        for kind in AttackKind.ALL:
            with self.subTest(kind=kind):
                background, injected = synth_attack_parts(kind, config)
                detectors = DetectorSuite(GeneratorConfig().detector_config(learn_baseline(synth_benign(config))))
                alerts = run_pipeline(merge_records(background, injected), ruleset, detectors=detectors).alerts
                injected_times = {record.timestamp for record in injected}
                self.assertTrue(alerts)
                self.assertTrue(all(alert.timestamp in injected_times for alert in alerts))


class MergeTests(SimpleTestCase):
    def setUp(self):
        self.generated = generate_ruleset(learn_baseline(synth_benign(ScenarioConfig(count=10))), generated_at=0)

    def test_merge_into_empty_repo(self):
        result = merge_repository("", self.generated)
        self.assertEqual(result.text, render_generated(self.generated))
        self.assertEqual(result.added, len(self.generated))
        self.assertTrue(all(CHANGELOG_LINE.match(line) for line in result.changelog))

    def test_identical_rule_twice(self):
        rule = self.generated[0]
        result = merge_repository("", [rule, rule])
        self.assertEqual((result.added, result.skipped), (1, 1))
        self.assertTrue(result.changelog[1].startswith(f"SKIP {rule.rule.sid} "))

    def test_idempotent(self):
        repo = 'alert tcp any any -> any 502 (msg:"Modbus probe"; sid:7;)\n'
        once = merge_repository(repo, self.generated)
        twice = merge_repository(once.text, self.generated)
        self.assertEqual(twice.text, once.text)
        self.assertEqual(twice.added, 0)

    def test_critical_rule_goes_above_rate_rules(self):
        rate_rules = [g for g in self.generated if g.kind == PatternKind.RATE]
        repo = render_generated(rate_rules)
        critical = [g for g in self.generated if g.kind == PatternKind.CRITICAL_COMMAND][:1]
        lines = merge_repository(repo, critical).text.splitlines()
        self.assertEqual(lines[0], critical[0].text)
        self.assertEqual(lines[1:], repo.splitlines())

    def test_retained_order_and_unclassified_lines(self):
        repo = "\n".join([
            "# site rules",
            'alert tcp any any -> any 502 (msg:"Modbus probe"; sid:7;)',
            'alert tcp !$SRC any -> $DST any (content:" 05 64 "; threshold: type both, track by src, count 5, seconds 10; sid:9;)',
        ]) + "\n"
        flow = [g for g in self.generated if g.kind == PatternKind.FLOW_DIRECTION]
        lines = merge_repository(repo, flow).text.splitlines()
        self.assertEqual(lines[:2], repo.splitlines()[:2])
        self.assertEqual(lines[2], flow[0].text)
        self.assertEqual(lines[3], repo.splitlines()[2])

    def test_sid_collision_is_renumbered(self):
        repo = f'alert tcp any any -> any 502 (msg:"taken"; sid:{FIRST_GENERATED_SID};)\n'
        result = merge_repository(repo, self.generated[:1])
        self.assertIn("renumbered", result.changelog[0])
        sids = [parse_rule(line).sid for line in result.text.splitlines()]
        self.assertEqual(len(set(sids)), 2)

    def test_plain_rules_are_accepted(self):
        rule = parse_rule('alert tcp any any -> any 20000 (content:"|0D|"; offset:12; depth:1; sid:42;)')
        self.assertEqual(priority_class(rule), PatternKind.CRITICAL_COMMAND)
        self.assertEqual(merge_repository("", [rule]).added, 1)

    def test_repo_must_parse(self):
        with self.assertRaises(RuleSetCompileError):
            merge_repository("alert tcp any any -> any any (msg:\"no sid\";)\n", self.generated)
