from django.core.management.base import BaseCommand

from bench import DEFAULT_REPETITIONS, compare_sequences, render_table, write_csv
from pipeline import read_capture
from rules import load_ruleset
from synth import ScenarioConfig, synth_ordering

from ._options import add_variable_arguments, operational_errors, variable_table


class Command(BaseCommand):
    help = 'Compare detection cost and latency of two orderings of the same rules'

    def add_arguments(self, parser):
        parser.add_argument('--seq-a', required=True, help='First ordering (rule file)')
        parser.add_argument('--seq-b', required=True, help='Second ordering (rule file)')
        parser.add_argument('--pcap', help='Capture to replay; the synthesized ordering scenario when omitted')
        parser.add_argument('--repetitions', type=int, default=DEFAULT_REPETITIONS)
        parser.add_argument('--csv', help='Write the CSV here instead of stdout')
        add_variable_arguments(parser)

    def handle(self, *args, **options):
        with operational_errors():
            variables = variable_table(options)
            seq_a = load_ruleset(options['seq_a'], variables)
            seq_b = load_ruleset(options['seq_b'], variables)
            capture = list(read_capture(options['pcap'])) if options['pcap'] else synth_ordering(ScenarioConfig())
            report = compare_sequences(seq_a, seq_b, capture, repetitions=options['repetitions'])

            if options['csv']:
                with open(options['csv'], 'w', encoding='utf-8', newline='') as f:
                    write_csv(report, f)
            else:
                write_csv(report, self.stdout)
        self.stdout.write(render_table(report))
        for comparison in report.latency_inversions:
            self.stderr.write(self.style.WARNING(comparison.diagnostics))
