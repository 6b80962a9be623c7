from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from rulegen import (
    GeneratorConfig,
    generate_ruleset,
    generated_variables,
    learn_baseline,
    merge_repository,
    render_generated,
)
from rules import render_variables

from ._options import operational_errors


class Command(BaseCommand):
    help = 'Learn a baseline from benign traffic and generate (or merge) a rule set'

    def add_arguments(self, parser):
        parser.add_argument('baseline', help='Benign pcap to learn from')
        parser.add_argument('--repo', help='Rule repository to merge into (updated in place)')
        parser.add_argument('--output', help='Write the rule set here instead of stdout')
        parser.add_argument('--vars-out', help='Write the learned variable bindings (var.NAME=...)')
        parser.add_argument('--changelog', help='Append ADD/SKIP lines of the merge here')
        parser.add_argument('--k-sigma', type=float, default=settings.DNP3IDS['K_SIGMA'])
        parser.add_argument('--window', type=int, default=settings.DNP3IDS['WINDOW'], help='Seconds per rate window')
        parser.add_argument('--select-timeout', type=float, default=settings.DNP3IDS['SELECT_TIMEOUT'])
        parser.add_argument('--no-critical', action='store_true', help='Do not emit critical-command rules')

    def handle(self, *args, **options):
        config = GeneratorConfig(
            k_sigma=options['k_sigma'],
            window=options['window'],
            select_timeout=options['select_timeout'],
            critical_functions=frozenset() if options['no_critical'] else frozenset(settings.DNP3IDS['CRITICAL_FUNCTIONS']),
        )
        with operational_errors():
            profile = learn_baseline(options['baseline'], window=options['window'])
            generated = generate_ruleset(profile, config)
            text = render_generated(generated)

            if options['repo']:
                repo = Path(options['repo'])
                merged = merge_repository(repo.read_text(encoding='utf-8') if repo.exists() else "", generated)
                text = merged.text
                if not options['output']:
                    repo.write_text(text, encoding='utf-8')
                if options['changelog']:
                    with open(options['changelog'], 'a', encoding='utf-8') as f:
                        f.write(merged.changelog_text)
                self.stderr.write(f"{merged.added} added, {merged.skipped} skipped")

            if options['vars_out']:
                bindings = render_variables(generated_variables(profile))
                Path(options['vars_out']).write_text(
                    "".join(f"var.{name}={value}\n" for name, value in bindings.items()), encoding='utf-8',
                )

            if options['output']:
                Path(options['output']).write_text(text, encoding='utf-8')
            elif not options['repo']:
                self.stdout.write(text, ending='')
