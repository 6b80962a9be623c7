from pathlib import Path

from django.core.management.base import BaseCommand

from api.v1.master.services import PushService

from ._options import add_variable_arguments, operational_errors, variable_bindings


class Command(BaseCommand):
    help = 'Compile a rule file at the master and record it as the next pushed version'

    def add_arguments(self, parser):
        parser.add_argument('rules', help='Rule file to push')
        parser.add_argument('--target', action='append', default=[], dest='targets',
                            help='Sensor id to deliver to; every sensor when omitted')
        parser.add_argument('--push-version', dest='push_version', type=int,
                            help='Explicit version; one above the latest when omitted')
        add_variable_arguments(parser)

    def handle(self, *args, **options):
        service = PushService()
        with operational_errors():
            text = Path(options['rules']).read_text(encoding='utf-8')
            push = service.create_push(
                text, variable_bindings(options), targets=options['targets'], version=options['push_version'],
            )
        self.stdout.write(f"Recorded rule set v{push.version} sha256={push.sha256}")
        for sensor_id, status in service.delivery_status(push).items():
            self.stdout.write(f"  {sensor_id}: {status}")
