import logging

from django.conf import settings
from django.core.management.base import BaseCommand

from api.v1.master.services import MasterIngestService
from uplink import MasterServer

from ._options import operational_errors

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run the master: accept sensor connections, store alerts, deliver rule pushes'

    def add_arguments(self, parser):
        parser.add_argument('--host', default=settings.DNP3IDS['MASTER_HOST'])
        parser.add_argument('--port', type=int, default=settings.DNP3IDS['MASTER_PORT'])
        parser.add_argument('--poll-interval', type=float, default=settings.DNP3IDS['POLL_INTERVAL'],
                            help='Seconds between checks for pending rule pushes')

    def handle(self, *args, **options):
        if not settings.DNP3IDS_SECRET:
            logger.warning("DNP3IDS_SECRET is not set: sensor hello tokens are not checked")
        with operational_errors():
            server = MasterServer(
                (options['host'], options['port']),
                MasterIngestService(),
                secret=settings.DNP3IDS_SECRET,
                poll_interval=options['poll_interval'],
            )
        self.stdout.write(f"Master listening on {options['host']}:{server.port}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            logger.info("Master shutting down")
        finally:
            server.server_close()
