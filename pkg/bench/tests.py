import io

from django.conf import settings
from django.test import SimpleTestCase

from bench import (
    CSV_COLUMNS,
    Ordering,
    RuleSetMismatch,
    compare_sequences,
    mean_packet_cost,
    measure_detection,
    render_table,
    write_csv,
)
from bench.constants import Winner
from rules import compile_ruleset, load_ruleset, load_variables
from synth import ScenarioConfig, synth_benign, synth_ordering

BENCH_DIR = settings.BASE_DIR / "rulesets" / "bench"
VARIABLES = load_variables(BENCH_DIR / "bench.env")

PING, FLOW, CONTENT, THRESHOLD = (1, 101), (1, 102), (1, 103), (1, 104)

OPERATE_RULE = 'alert tcp !$SRC any -> $DST 20000 (content:" 04 "; offset:12; depth:1; sid:103;)\n'
FILLER_RULE = 'alert tcp !$SRC any -> $DST 20000 (content:" 7F "; offset:12; depth:1; sid:{sid};)\n'


def sequence(name):
    return load_ruleset(BENCH_DIR / name, VARIABLES)


class MeasureTests(SimpleTestCase):
    def setUp(self):
        self.capture = synth_ordering(ScenarioConfig())

    def test_costs_by_position(self):
        samples = measure_detection(sequence("sequence1.rules"), self.capture)
        costs = {sample.rule_id: sample.options_evaluated for sample in samples}
        self.assertEqual(costs, {PING: 1, FLOW: 3, CONTENT: 5, THRESHOLD: 8})

        samples = measure_detection(sequence("sequence2.rules"), self.capture)
        costs = {sample.rule_id: sample.options_evaluated for sample in samples}
        self.assertEqual(costs, {PING: 4, FLOW: 6, CONTENT: 4, THRESHOLD: 3})

    def test_one_sample_per_alert_and_repetition(self):
        ruleset = compile_ruleset(OPERATE_RULE, VARIABLES)
        samples = measure_detection(ruleset, self.capture, repetitions=25)
        self.assertEqual(len(samples), 25)
        self.assertEqual(sorted({s.repetition for s in samples}), list(range(25)))
        self.assertTrue(all(s.emitted_ns >= s.entered_ns for s in samples))

    def test_options_deterministic(self):
        ruleset = sequence("sequence1.rules")
        first = [s.options_evaluated for s in measure_detection(ruleset, self.capture)]
        second = [s.options_evaluated for s in measure_detection(ruleset, self.capture)]
        self.assertEqual(first, second)

    def test_no_hits_no_samples(self):
        self.assertEqual(measure_detection(sequence("sequence1.rules"), synth_benign(ScenarioConfig(count=5))), [])

    def test_repetitions_must_be_positive(self):
        with self.assertRaises(ValueError):
            measure_detection(sequence("sequence1.rules"), self.capture, repetitions=0)

    def test_cost_grows_with_position(self):
        costs = []
        for fillers in range(6):
            text = "".join(FILLER_RULE.format(sid=200 + i) for i in range(fillers)) + OPERATE_RULE
            (sample,) = measure_detection(compile_ruleset(text, VARIABLES), self.capture)
            self.assertEqual(sample.position, fillers)
            costs.append(sample.options_evaluated)
        self.assertEqual(costs, [2 + 2 * n for n in range(6)])

    def test_unmatched_options_add_cost(self):
        base = compile_ruleset(OPERATE_RULE, VARIABLES)
        padded = compile_ruleset(OPERATE_RULE + FILLER_RULE.format(sid=300), VARIABLES)
        capture = synth_ordering(ScenarioConfig())
        self.assertGreater(mean_packet_cost(padded, capture), mean_packet_cost(base, capture))


class CompareSequencesTests(SimpleTestCase):
    def setUp(self):
        self.capture = synth_ordering(ScenarioConfig())
        self.seq1 = sequence("sequence1.rules")
        self.seq2 = sequence("sequence2.rules")

    def test_earlier_position_evaluates_fewer_options(self):
        report = compare_sequences(self.seq1, self.seq2, self.capture)
        winners = {(c.gid, c.sid): c.fewer_options for c in report.comparisons}
        self.assertEqual(winners, {
            PING: Ordering.SEQ_A,
            FLOW: Ordering.SEQ_A,
            CONTENT: Ordering.SEQ_B,
            THRESHOLD: Ordering.SEQ_B,
        })
        self.assertEqual(report.cost_violations, [])

    def test_latency_checked_or_flagged(self):
        report = compare_sequences(self.seq1, self.seq2, self.capture, repetitions=1000)
        stats_a = report.stats[Ordering.SEQ_A][THRESHOLD]
        stats_b = report.stats[Ordering.SEQ_B][THRESHOLD]
        self.assertEqual(stats_a.samples, 1000)
        self.assertEqual(stats_b.samples, 1000)
        (comparison,) = [c for c in report.comparisons if (c.gid, c.sid) == THRESHOLD]
        if stats_b.mean_us > stats_a.mean_us:
            self.assertTrue(comparison.latency_inverted)
            self.assertIn("position 0", comparison.diagnostics)
        else:
            self.assertFalse(comparison.latency_inverted)

    def test_same_ordering_ties(self):
        report = compare_sequences(self.seq1, self.seq1, self.capture)
        self.assertTrue(all(c.fewer_options == Winner.TIE for c in report.comparisons))
        self.assertEqual(report.latency_inversions, [])

    def test_single_rule_sets_tie(self):
        ruleset = compile_ruleset(OPERATE_RULE, VARIABLES)
        report = compare_sequences(ruleset, ruleset, self.capture)
        (comparison,) = report.comparisons
        self.assertEqual(comparison.fewer_options, Winner.TIE)

    def test_different_rules_rejected(self):
        with self.assertRaises(RuleSetMismatch):
            compare_sequences(self.seq1, compile_ruleset(OPERATE_RULE, VARIABLES), self.capture)


class ReportTests(SimpleTestCase):
    def setUp(self):
        capture = synth_ordering(ScenarioConfig())
        self.report = compare_sequences(sequence("sequence1.rules"), sequence("sequence2.rules"), capture, repetitions=3)

    def test_csv(self):
        handle = io.StringIO()
        write_csv(self.report, handle)
        lines = handle.getvalue().splitlines()
        self.assertEqual(lines[0], ",".join(CSV_COLUMNS))
        self.assertEqual(len(lines), 1 + 8)
        self.assertTrue(lines[1].startswith("101,seq_a,0,"))
        self.assertTrue(lines[1].endswith(",1.00"))

    def test_table(self):
        table = render_table(self.report)
        for sid in ("101", "102", "103", "104"):
            self.assertIn(sid, table)
        self.assertIn("repetitions: 3", table)
