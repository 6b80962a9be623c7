import os
import random
import tempfile
from ipaddress import IPv4Address, ip_network

from django.test import SimpleTestCase

from dnp3 import build_frame, encode_frame
from dnp3.constants import FunctionCode
from pipeline.decoder import ParsedPacket, Protocol
from pipeline.flows import FlowVerdict
from rules import (
    ThresholdState,
    compile_ruleset,
    evaluate,
    evaluate_packet,
    load_variables,
    parse_address,
    parse_port,
    parse_rule,
    parse_variables,
    render_rule,
)
from rules.addresses import Negated, NetworkSet
from rules.exceptions import (
    DuplicateSid,
    MissingSid,
    RuleSetCompileError,
    RuleSyntaxError,
    UnknownOption,
    UnresolvedVariable,
)
from rules.model import ContentOption, ThresholdOption
from rules.threshold import USEC_PER_SEC

SUBSTATION_RULES = [
    'alert tcp !$SRC any -> $DST any (content:" 04 "; offset:12; depth:1; msg:"DNP3 operate from Unknow source"; sid:3;)',
    'alert tcp !$SRC any -> $DST any (flow: not_established; msg:"Unknown flow"; sid:5;)',
    'alert tcp !$SRC any -> $DST any (content:" 05 64 "; threshold: type both, track by src, count 5, seconds 10; sid:9;)',
    'alert tcp !$SRC any -> $DST any (msg:"DNP3-Bad-CRC"; sid:1; gid:145; metadata: rule-type preproc;)',
    'alert tcp !$SRC any -> $DST any (msg:"DNP3-Invalid sequence no"; sid:3; gid:145; metadata: rule-type preproc;)',
]
SUBSTATION_TEXT = "\n".join(SUBSTATION_RULES) + "\n"

MASTER = "10.0.0.1"
OUTSTATION = "10.0.0.2"
ATTACKER = "10.0.0.66"
VARIABLES = parse_variables([f"SRC={MASTER}/32,{OUTSTATION}/32", f"DST={OUTSTATION}/32"])

ESTABLISHED = FlowVerdict(established=True, from_initiator=True)
UNESTABLISHED = FlowVerdict(established=False, new_flow=True)


def dnp3_payload(function_code: int, payload: bytes = b"") -> bytes:
    return encode_frame(build_frame(10, 1, function_code, payload))


def packet(src=ATTACKER, dst=OUTSTATION, payload=b"", ts=0, sport=40000, dport=20000, protocol=Protocol.TCP):
    return ParsedPacket(
        timestamp=ts,
        src_ip=src,
        dst_ip=dst,
        protocol=protocol,
        src_port=sport,
        dst_port=dport,
        tcp_flags=0x18,
        tcp_payload=payload,
    )


class Detection:
    def __init__(self, gid, sid, msg):
        self.gid, self.sid, self.msg = gid, sid, msg


class ParseRuleTests(SimpleTestCase):
    def test_all_sample_rules_parse(self):
        rules = [parse_rule(text) for text in SUBSTATION_RULES]
        self.assertEqual([rule.sid for rule in rules], [3, 5, 9, 1, 3])
        self.assertEqual([rule.gid for rule in rules], [1, 1, 1, 145, 145])

    def test_payload_rule_fields(self):
        rule = parse_rule(SUBSTATION_RULES[0])
        self.assertEqual(rule.action, "alert")
        self.assertEqual(rule.contents, (ContentOption(b"\x04", offset=12, depth=1),))
        self.assertEqual(rule.msg, "DNP3 operate from Unknow source")

    def test_flow_rule(self):
        rule = parse_rule(SUBSTATION_RULES[1])
        self.assertEqual(rule.flow.keywords, ("not_established",))

    def test_threshold_rule_accepts_spaced_track_and_falls_back_on_msg(self):
        rule = parse_rule(SUBSTATION_RULES[2])
        self.assertEqual(rule.threshold, ThresholdOption("both", "by_src", 5, 10))
        self.assertEqual(rule.contents[0].pattern, b"\x05\x64")
        self.assertEqual(rule.msg, "sid:9")

    def test_preproc_flag(self):
        self.assertTrue(parse_rule(SUBSTATION_RULES[3]).preproc)
        self.assertFalse(parse_rule(SUBSTATION_RULES[0]).preproc)

    def test_content_forms(self):
        pipe = parse_rule('alert tcp any any -> any any (content:"|05 64|"; sid:1;)')
        mixed = parse_rule('alert tcp any any -> any any (content:"ab|00|c"; sid:1;)')
        ascii_text = parse_rule('alert tcp any any -> any any (content:"GET /"; sid:1;)')
        self.assertEqual(pipe.contents[0].pattern, b"\x05\x64")
        self.assertEqual(mixed.contents[0].pattern, b"ab\x00c")
        self.assertEqual(ascii_text.contents[0].pattern, b"GET /")

    def test_quoted_semicolon_stays_in_msg(self):
        rule = parse_rule('alert tcp any any -> any any (msg:"a; b"; sid:1;)')
        self.assertEqual(rule.msg, "a; b")

    def test_address_list_with_spaces(self):
        rule = parse_rule('alert tcp [10.0.0.1, 10.0.0.5] any -> any [20000,20001] (sid:1;)')
        self.assertTrue(rule.header.src.matches("10.0.0.5"))
        self.assertTrue(rule.header.dst_port.matches(20001))

    def test_blank_and_comment_lines(self):
        self.assertIsNone(parse_rule(""))
        self.assertIsNone(parse_rule("   "))
        self.assertIsNone(parse_rule("# alert tcp any any -> any any (sid:1;)"))

    def test_missing_sid(self):
        with self.assertRaises(MissingSid):
            parse_rule('alert tcp any any -> any any (msg:"x";)')

    def test_unknown_option(self):
        with self.assertRaises(UnknownOption) as ctx:
            parse_rule('alert tcp any any -> any any (pcre:"/x/"; sid:1;)')
        self.assertEqual(ctx.exception.name, "pcre")

    def test_syntax_errors_carry_position(self):
        with self.assertRaises(RuleSyntaxError) as ctx:
            parse_rule('block tcp any any -> any any (sid:1;)')
        self.assertEqual(ctx.exception.position, 0)

        with self.assertRaises(RuleSyntaxError) as ctx:
            parse_rule('alert tcp any any => any any (sid:1;)')
        self.assertEqual(ctx.exception.position, 18)

    def test_option_errors(self):
        bad = [
            'alert tcp any any -> any any (offset:3; sid:1;)',
            'alert tcp any any -> any any (content:"abc; sid:1;)',
            'alert tcp any any -> any any (content:" 05 64 "; depth:1; sid:1;)',
            'alert tcp any any -> any any (flow: established,not_established; sid:1;)',
            'alert tcp any any -> any any (threshold: type both, track by_src, count 0, seconds 10; sid:1;)',
            'alert tcp any any -> any any (sid:1; sid:2;)',
            'alert tcp any any -> any any (msg:"x"; sid:1; metadata: rule-type preproc;)',
            'alert tcp any any -> any any (sid:1)',
            'alert tcp 10.0.0.300 any -> any any (sid:1;)',
        ]
        for text in bad:
            with self.subTest(text=text), self.assertRaises(RuleSyntaxError):
                parse_rule(text)


class RenderRuleTests(SimpleTestCase):
    def test_sample_rules_round_trip(self):
        for text in SUBSTATION_RULES:
            rule = parse_rule(text)
            again = parse_rule(render_rule(rule))
            self.assertEqual(again.semantic_key(), rule.semantic_key())

    def test_hex_content_rendering(self):
        self.assertIn('content:" 04 "; offset:12; depth:1', render_rule(parse_rule(SUBSTATION_RULES[0])))

    def test_threshold_rendering(self):
        self.assertIn(
            "threshold: type both, track by_src, count 5, seconds 10",
            render_rule(parse_rule(SUBSTATION_RULES[2])),
        )

    def test_ascii_that_looks_like_hex_round_trips(self):
        rule = parse_rule('alert tcp any any -> any any (content:"|41 42|"; sid:1;)')
        self.assertEqual(parse_rule(render_rule(rule)).contents[0].pattern, b"AB")


class CompileRuleSetTests(SimpleTestCase):
    def test_positions_follow_file_order(self):
        ruleset = compile_ruleset("# header\n\n" + SUBSTATION_TEXT, VARIABLES, version=4)
        self.assertEqual([rule.position for rule in ruleset.rules], [0, 1, 2, 3, 4])
        self.assertEqual(ruleset.version, 4)
        self.assertEqual(set(ruleset.preproc_bindings), {(145, 1), (145, 3)})

    def test_unresolved_variable(self):
        with self.assertRaises(UnresolvedVariable) as ctx:
            compile_ruleset(SUBSTATION_TEXT, parse_variables([f"DST={OUTSTATION}/32"]))
        self.assertEqual(ctx.exception.name, "SRC")

    def test_duplicate_sid(self):
        text = SUBSTATION_RULES[0] + "\n" + SUBSTATION_RULES[0].replace("Unknow", "other") + "\n"
        with self.assertRaises(DuplicateSid):
            compile_ruleset(text, VARIABLES)

    def test_parse_errors_are_aggregated(self):
        text = "\n".join([SUBSTATION_RULES[0], "garbage", SUBSTATION_RULES[1], 'alert tcp any any -> any any (x:1; sid:7;)'])
        with self.assertRaises(RuleSetCompileError) as ctx:
            compile_ruleset(text, VARIABLES)
        self.assertEqual([line for line, _ in ctx.exception.errors], [2, 4])


class EvaluatePacketTests(SimpleTestCase):
    def setUp(self):
        self.ruleset = compile_ruleset(SUBSTATION_TEXT, VARIABLES)
        self.state = ThresholdState()

    def test_operate_from_unknown_source(self):
        alert = evaluate_packet(self.ruleset, packet(payload=dnp3_payload(FunctionCode.OPERATE)), ESTABLISHED, self.state)
        self.assertEqual(alert.sid, 3)
        self.assertEqual(alert.position, 0)
        self.assertEqual(alert.function_code, FunctionCode.OPERATE)
        self.assertEqual(alert.options_evaluated, 2)

    def test_operate_from_master_is_silent(self):
        pkt = packet(src=MASTER, payload=dnp3_payload(FunctionCode.OPERATE))
        self.assertIsNone(evaluate_packet(self.ruleset, pkt, ESTABLISHED, self.state))

    def test_unestablished_flow(self):
        alert = evaluate_packet(self.ruleset, packet(), UNESTABLISHED, self.state)
        self.assertEqual(alert.sid, 5)

    def test_threshold_fires_once_on_fifth_frame(self):
        read = dnp3_payload(FunctionCode.READ)
        results = [
            evaluate_packet(self.ruleset, packet(payload=read, ts=i * USEC_PER_SEC), ESTABLISHED, self.state)
            for i in range(7)
        ]
        self.assertEqual([r is not None for r in results], [False] * 4 + [True, False, False])
        self.assertEqual(results[4].sid, 9)
        self.assertEqual(results[4].msg, "sid:9")

    def test_four_frame_burst_is_silent(self):
        read = dnp3_payload(FunctionCode.READ)
        for i in range(4):
            self.assertIsNone(evaluate_packet(self.ruleset, packet(payload=read, ts=i), ESTABLISHED, self.state))

    def test_miss_counts_all_checks(self):
        evaluation = evaluate(self.ruleset, packet(payload=b"hello"), ESTABLISHED, self.state)
        self.assertEqual(evaluation.alerts, [])
        # header plus one failing option for each of the five rules
        self.assertEqual(evaluation.options_evaluated, 10)

        evaluation = evaluate(self.ruleset, packet(src=MASTER), ESTABLISHED, self.state)
        self.assertEqual(evaluation.options_evaluated, 5)

    def test_preproc_binding_uses_rule_text(self):
        detections = [Detection(145, 1, "detector text")]
        evaluation = evaluate(self.ruleset, packet(payload=b"hello"), ESTABLISHED, self.state, detections=detections)
        self.assertEqual(len(evaluation.alerts), 1)
        alert = evaluation.alerts[0]
        self.assertEqual((alert.gid, alert.sid, alert.position), (145, 1, 3))
        self.assertEqual(alert.msg, "DNP3-Bad-CRC")

    def test_unbound_detection_is_reported_directly(self):
        detections = [Detection(145, 10, "Operate without Select")]
        evaluation = evaluate(self.ruleset, packet(payload=b"hello"), ESTABLISHED, self.state, detections=detections)
        self.assertEqual([(a.sid, a.position, a.msg) for a in evaluation.alerts], [(10, None, "Operate without Select")])

    def test_bound_detection_scoped_out_by_header(self):
        detections = [Detection(145, 1, "detector text")]
        evaluation = evaluate(self.ruleset, packet(src=MASTER), ESTABLISHED, self.state, detections=detections)
        self.assertEqual(evaluation.alerts, [])

    def test_pass_rule_suppresses(self):
        text = f"pass tcp {ATTACKER} any -> any any (sid:100;)\n" + SUBSTATION_TEXT
        ruleset = compile_ruleset(text, VARIABLES)
        evaluation = evaluate(
            ruleset,
            packet(payload=dnp3_payload(FunctionCode.OPERATE)),
            ESTABLISHED,
            self.state,
            detections=[Detection(145, 10, "x")],
        )
        self.assertTrue(evaluation.suppressed)
        self.assertEqual(evaluation.alerts, [])

    def test_drop_action_marks_packet(self):
        ruleset = compile_ruleset(SUBSTATION_TEXT.replace("alert", "drop", 1), VARIABLES)
        evaluation = evaluate(ruleset, packet(payload=dnp3_payload(FunctionCode.OPERATE)), ESTABLISHED, self.state)
        self.assertTrue(evaluation.drop)

    def test_evaluate_all_collects_every_match(self):
        evaluation = evaluate(
            self.ruleset,
            packet(payload=dnp3_payload(FunctionCode.OPERATE)),
            UNESTABLISHED,
            self.state,
            evaluate_all=True,
        )
        self.assertEqual([a.sid for a in evaluation.alerts], [3, 5])

    def test_header_only_icmp_rule(self):
        ruleset = compile_ruleset(
            'alert icmp !$SRC any -> $DST any (content:"never"; msg:"ping"; sid:20;)\n', VARIABLES
        )
        pkt = packet(sport=0, dport=0, protocol=Protocol.ICMP)
        alert = evaluate_packet(ruleset, pkt, FlowVerdict(), self.state)
        self.assertEqual(alert.sid, 20)
        self.assertEqual(alert.options_evaluated, 1)
        self.assertIsNone(evaluate_packet(ruleset, packet(), ESTABLISHED, self.state))

    def test_bidirectional_header(self):
        ruleset = compile_ruleset(f"alert tcp {OUTSTATION} 20000 <> {ATTACKER} any (sid:30;)\n", {})
        self.assertIsNotNone(evaluate_packet(ruleset, packet(), ESTABLISHED, self.state))

    def test_to_server_uses_port_heuristic_without_initiator(self):
        ruleset = compile_ruleset("alert tcp any any -> any any (flow: to_server; sid:40;)\n", {})
        midstream = FlowVerdict()
        self.assertIsNotNone(evaluate_packet(ruleset, packet(), midstream, self.state))
        reply = packet(src=OUTSTATION, dst=ATTACKER, sport=20000, dport=40000)
        self.assertIsNone(evaluate_packet(ruleset, reply, midstream, self.state))


class OrderingPropertyTests(SimpleTestCase):
    def _compile(self, lines):
        return compile_ruleset("\n".join(lines) + "\n", VARIABLES)

    def test_single_match_is_permutation_invariant(self):
        rng = random.Random(3)
        pkt = packet(payload=dnp3_payload(FunctionCode.OPERATE))
        lines = list(SUBSTATION_RULES)
        for _ in range(20):
            rng.shuffle(lines)
            alert = evaluate_packet(self._compile(lines), pkt, ESTABLISHED, ThresholdState())
            self.assertEqual((alert.gid, alert.sid), (1, 3))

    def test_minimum_position_wins(self):
        pkt = packet(payload=dnp3_payload(FunctionCode.OPERATE))
        alert = evaluate_packet(self._compile(SUBSTATION_RULES), pkt, UNESTABLISHED, ThresholdState())
        self.assertEqual(alert.position, 0)
        reordered = [SUBSTATION_RULES[1], SUBSTATION_RULES[0]]
        alert = evaluate_packet(self._compile(reordered), pkt, UNESTABLISHED, ThresholdState())
        self.assertEqual(alert.sid, 5)

    def test_moving_a_rule_up_never_costs_more(self):
        pkt = packet(payload=dnp3_payload(FunctionCode.OPERATE))
        target = SUBSTATION_RULES[0]
        others = SUBSTATION_RULES[1:]
        costs = []
        for k in range(len(SUBSTATION_RULES)):
            lines = others[:k] + [target] + others[k:]
            alert = evaluate_packet(self._compile(lines), pkt, ESTABLISHED, ThresholdState())
            costs.append(alert.options_evaluated)
        self.assertEqual(costs, sorted(costs))

    def test_more_options_cost_at_least_as_much(self):
        a = 'alert tcp any any -> any any (content:"zz"; flow: established; sid:1;)'
        b = 'alert tcp any any -> any any (content:"zz"; sid:1;)'
        pkt = packet(payload=b"hello")
        cost_a = evaluate(compile_ruleset(a, {}), pkt, ESTABLISHED, ThresholdState()).options_evaluated
        cost_b = evaluate(compile_ruleset(b, {}), pkt, ESTABLISHED, ThresholdState()).options_evaluated
        self.assertGreaterEqual(cost_a, cost_b)


def tumbling_windows(times, seconds):
    """Partition sorted event times into tumbling windows anchored on first events."""
    windows = []
    for t in times:
        if not windows or t - windows[-1][0] >= seconds * USEC_PER_SEC:
            windows.append([t])
        else:
            windows[-1].append(t)
    return windows


class ThresholdTests(SimpleTestCase):
    def test_matches_window_oracle(self):
        rng = random.Random(11)
        option = ThresholdOption("both", "by_src", 3, 10)
        for _ in range(200):
            times = sorted(rng.randrange(0, 60 * USEC_PER_SEC) for _ in range(rng.randrange(1, 15)))
            state = ThresholdState()
            fired = [t for t in times if state.check((1, 9), option, ATTACKER, t)]
            windows = tumbling_windows(times, option.seconds)
            expected = [w[option.count - 1] for w in windows if len(w) >= option.count]
            self.assertEqual(fired, expected)
            for window in windows:
                self.assertLessEqual(sum(1 for t in fired if t in window), 1)

    def test_tumbling_differs_from_sliding(self):
        option = ThresholdOption("both", "by_src", 3, 10)
        times = [0, 8 * USEC_PER_SEC, 12 * USEC_PER_SEC, 14 * USEC_PER_SEC]
        state = ThresholdState()
        self.assertFalse(any(state.check((1, 9), option, ATTACKER, t) for t in times))
        sliding = any(
            sum(1 for u in times if t <= u < t + option.seconds * USEC_PER_SEC) >= option.count for t in times
        )
        self.assertTrue(sliding)

    def test_track_keys_are_independent(self):
        option = ThresholdOption("both", "by_src", 2, 10)
        state = ThresholdState()
        self.assertFalse(state.check((1, 9), option, "a", 0))
        self.assertFalse(state.check((1, 9), option, "b", 1))
        self.assertTrue(state.check((1, 9), option, "a", 2))

    def test_limit_and_threshold_types(self):
        limit = ThresholdOption("limit", "by_src", 2, 10)
        every = ThresholdOption("threshold", "by_src", 2, 10)
        state = ThresholdState()
        self.assertEqual([state.check((1, 1), limit, "a", t) for t in range(4)], [True, True, False, False])
        self.assertEqual([state.check((1, 2), every, "a", t) for t in range(4)], [False, True, False, True])


class AddressTests(SimpleTestCase):
    def test_negation_is_complement(self):
        rng = random.Random(5)
        inner = NetworkSet((ip_network("10.0.0.0/24"), ip_network("192.168.1.7/32")))
        negated = Negated(inner)
        for _ in range(2000):
            ip = str(IPv4Address(rng.getrandbits(32)))
            self.assertNotEqual(inner.matches(ip), negated.matches(ip))
        self.assertFalse(negated.matches("192.168.1.7"))

    def test_lists_with_negations(self):
        expr = parse_address("[10.0.0.0/8,!10.0.0.66]")
        self.assertTrue(expr.matches("10.1.2.3"))
        self.assertFalse(expr.matches("10.0.0.66"))
        self.assertFalse(expr.matches("11.0.0.1"))

    def test_ports(self):
        self.assertTrue(parse_port("1024:").matches(65000))
        self.assertFalse(parse_port("!20000").matches(20000))
        self.assertTrue(parse_port(":1023").matches(0))
        with self.assertRaises(RuleSyntaxError):
            parse_port("70000")

    def test_variable_bindings(self):
        table = parse_variables(["$MASTERS=10.0.0.1,10.0.0.3", "OUT=10.0.1.0/24"])
        self.assertEqual(len(table["MASTERS"]), 2)
        with self.assertRaises(RuleSyntaxError):
            parse_variables(["MASTERS"])

    def test_variable_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "vars.env")
            with open(path, "w") as handle:
                handle.write("# site\nvar.SRC=10.0.0.1,10.0.0.2\nDST=10.0.0.2\n")
            table = load_variables(path)
            self.assertEqual(table["SRC"], (ip_network("10.0.0.1/32"), ip_network("10.0.0.2/32")))
            self.assertEqual(table["DST"], (ip_network("10.0.0.2/32"),))
            with self.assertRaises(RuleSyntaxError):
                load_variables(os.path.join(tmp, "absent.env"))
