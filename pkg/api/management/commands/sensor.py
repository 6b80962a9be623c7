import sys

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from pipeline import read_capture
from uplink import SensorConfig, SensorNode, issue_token
from uplink.exceptions import SensorConfigError

from ._options import add_variable_arguments, config_files, flag_overrides, operational_errors, variable_bindings

FLAG_FIELDS = (
    'sensor_id', 'master_host', 'master_port', 'token', 'rules_path', 'rule_version',
    'authorized_masters', 'select_timeout', 'sbo_key_mode', 'mode', 'source', 'output',
    'spool_size', 'seq_window', 'flow_idle_timeout',
)


def default_config() -> SensorConfig:
    defaults = settings.DNP3IDS
    return SensorConfig(
        select_timeout=defaults['SELECT_TIMEOUT'],
        sbo_key_mode=defaults['SBO_KEY_MODE'],
        spool_size=defaults['SPOOL_SIZE'],
        seq_window=defaults['SEQ_WINDOW'],
        flow_idle_timeout=defaults['FLOW_IDLE_TIMEOUT'],
        evaluate_all=defaults['EVALUATE_ALL'],
    )


def build_config(options) -> SensorConfig:
    """
    Settings defaults, then DNP3IDS_CONFIG and --config files, then flags.

    Raises:
        SensorConfigError: a file is missing or a value does not fit
        RuleSyntaxError: a variable binding is malformed
    """
    config = default_config()
    for path in config_files(options.get('config')):
        config = SensorConfig.from_file(path, config)

    values = flag_overrides(options, FLAG_FIELDS)
    if options.get('evaluate_all'):
        values['evaluate_all'] = True
    for name, value in variable_bindings(options).items():
        values[f"var.{name}"] = value
    config = SensorConfig.from_mapping(values, config)

    if config.master_host and not config.token and settings.DNP3IDS_SECRET:
        config = SensorConfig.from_mapping({'token': issue_token(config.sensor_id, settings.DNP3IDS_SECRET)}, config)
    return config.validate()


class Command(BaseCommand):
    help = 'Run a sensor: capture through the pipeline, alerts to the master'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value sensor config file')
        parser.add_argument('--sensor-id', dest='sensor_id')
        parser.add_argument('--master-host', dest='master_host', help='Master address; no uplink when empty')
        parser.add_argument('--master-port', dest='master_port', type=int)
        parser.add_argument('--token', help='Hello token; issued from DNP3IDS_SECRET when omitted')
        parser.add_argument('--rules', dest='rules_path')
        parser.add_argument('--rule-version', dest='rule_version', type=int)
        add_variable_arguments(parser)
        parser.add_argument('--authorized-masters', dest='authorized_masters', help='Comma-separated master IPs')
        parser.add_argument('--select-timeout', dest='select_timeout', type=float)
        parser.add_argument('--sbo-key-mode', dest='sbo_key_mode', choices=['digest', 'addresses'])
        parser.add_argument('--mode', choices=['ids', 'ips'])
        parser.add_argument('--source', help="pcap file, or '-' for a pcap stream on stdin")
        parser.add_argument('--output', help='Forwarded capture (ips mode)')
        parser.add_argument('--spool-size', dest='spool_size', type=int)
        parser.add_argument('--seq-window', dest='seq_window', type=int)
        parser.add_argument('--flow-idle-timeout', dest='flow_idle_timeout', type=float)
        parser.add_argument('--evaluate-all', action='store_true')
        parser.add_argument('--flush-timeout', type=float, default=30.0,
                            help='Seconds to wait for the master to acknowledge spooled alerts')

    def handle(self, *args, **options):
        with operational_errors():
            config = build_config(options)
            if not config.source:
                raise SensorConfigError("no capture source configured")
            node = SensorNode(config)
            records = read_capture(sys.stdin.buffer) if config.source == '-' else None
            node.start()
            try:
                result = node.run(records)
            finally:
                node.stop(options['flush_timeout'] if node.uplink is not None else 0.0)

        for alert in result.alerts:
            self.stdout.write(
                f"{alert.timestamp} [{alert.gid}:{alert.sid}] {alert.msg} "
                f"{alert.src_ip}:{alert.src_port} -> {alert.dst_ip}:{alert.dst_port} v{alert.rule_version}"
            )
        counters = result.counters.as_dict()
        self.stderr.write(" ".join(f"{key}={value}" for key, value in counters.items() if not isinstance(value, dict)))
        if node.uplink is not None and len(node.uplink.spool):
            raise CommandError(f"{len(node.uplink.spool)} alerts not acknowledged by the master")
