from django.core.management.base import BaseCommand

from pipeline import write_capture
from synth import SCENARIOS, CrcSite, ScenarioConfig, corrupt_crc, synth_scenario

from ._options import operational_errors

SCENARIO_FLAGS = (
    'rate', 'count', 'seed', 'flood_count', 'flood_seconds', 'attack_at',
    'master_ip', 'outstation_ip', 'attacker_ip',
)


class Command(BaseCommand):
    help = 'Write a synthesized scenario capture'

    def add_arguments(self, parser):
        parser.add_argument('scenario', choices=SCENARIOS)
        parser.add_argument('output', help='pcap file to write')
        parser.add_argument('--config', help='key=value scenario file')
        parser.add_argument('--rate', type=float, help='Poll cycles per second')
        parser.add_argument('--count', type=int, help='Poll cycles')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--flood-count', type=int)
        parser.add_argument('--flood-seconds', type=float)
        parser.add_argument('--attack-at', type=int, help='Poll cycle after which the attack is injected')
        parser.add_argument('--master-ip')
        parser.add_argument('--outstation-ip')
        parser.add_argument('--attacker-ip')
        parser.add_argument('--spoof-source', action='store_true', help='Replay from a spoofed master address')
        parser.add_argument('--corrupt', type=int, metavar='INDEX',
                            help='Flip one CRC-covered bit in DNP3 record INDEX')
        parser.add_argument('--corrupt-site', choices=[CrcSite.HEADER, CrcSite.BODY], default=CrcSite.HEADER)
        parser.add_argument('--corrupt-bit', type=int, default=0)

    def handle(self, *args, **options):
        with operational_errors():
            config = ScenarioConfig.from_file(options['config']) if options['config'] else ScenarioConfig()
            values = {name: options[name] for name in SCENARIO_FLAGS if options[name] is not None}
            if options['spoof_source']:
                values['spoof_source'] = True
            config = ScenarioConfig.from_mapping(values, config)

            records = synth_scenario(options['scenario'], config)
            if options['corrupt'] is not None:
                records = corrupt_crc(records, options['corrupt'], site=options['corrupt_site'], bit=options['corrupt_bit'])
            written = write_capture(records, options['output'])
        self.stdout.write(f"Wrote {written} records to {options['output']}")
