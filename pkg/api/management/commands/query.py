import json
import time

from django.conf import settings
from django.core.management.base import BaseCommand

from api.v1.master.constants import QueryLimits
from api.v1.master.serializers import AlertRecordSerializer
from api.v1.master.services import AlertStore, StoreQuery

from ._options import operational_errors


class Command(BaseCommand):
    help = "Query the master's alert store"

    def add_arguments(self, parser):
        parser.add_argument('--start-us', type=int, help='Inclusive lower bound on alert time')
        parser.add_argument('--end-us', type=int, help='Exclusive upper bound on alert time')
        parser.add_argument('--sensor-id')
        parser.add_argument('--sid', type=int)
        parser.add_argument('--gid', type=int)
        parser.add_argument('--limit', type=int, default=QueryLimits.DEFAULT)
        parser.add_argument('--json', action='store_true', help='One JSON object per line')
        parser.add_argument('--follow', action='store_true', help='Keep polling for new alerts')
        parser.add_argument('--interval', type=float, default=settings.DNP3IDS['POLL_INTERVAL'] * 5)

    def handle(self, *args, **options):
        store = AlertStore()
        serializer = AlertRecordSerializer()
        filters = {name: options[name] for name in ('start_us', 'end_us', 'sensor_id', 'sid', 'gid')}
        after_id = None
        with operational_errors():
            while True:
                records = store.query(StoreQuery(limit=options['limit'], after_id=after_id, **filters))
                for record in records:
                    self.stdout.write(self.format(serializer.serialize(record), options['json']))
                if records:
                    after_id = max(record.id for record in records)
                if not options['follow']:
                    break
                try:
                    time.sleep(options['interval'])
                except KeyboardInterrupt:
                    break

    def format(self, alert, as_json: bool) -> str:
        if as_json:
            return json.dumps(alert, sort_keys=True)
        return (
            f"{alert['ts_us']} {alert['sensor_id']}#{alert['seq']} [{alert['gid']}:{alert['sid']}] {alert['msg']} "
            f"{alert['src_ip']}:{alert['src_port']} -> {alert['dst_ip']}:{alert['dst_port']} v{alert['rule_version']}"
        )
