"""Shared plumbing for the management commands."""
from contextlib import contextmanager
from typing import Dict, Iterable, Iterator, Mapping, Optional

from django.conf import settings
from django.core.management.base import CommandError

from api.v1.master.exceptions import APIError
from bench.exceptions import BenchError
from dnp3.exceptions import Dnp3Error
from pipeline.exceptions import CaptureError
from rules import load_variables, parse_variables, render_variables
from rules.exceptions import RuleError
from rulegen.exceptions import RulegenError
from synth.exceptions import SynthError
from uplink.exceptions import UplinkError

OPERATIONAL_ERRORS = (
    APIError,
    BenchError,
    CaptureError,
    Dnp3Error,
    RuleError,
    RulegenError,
    SynthError,
    UplinkError,
)


@contextmanager
def operational_errors() -> Iterator[None]:
    """Turn domain errors into CommandError (exit status 1)."""
    try:
        yield
    except OPERATIONAL_ERRORS as e:
        raise CommandError(e.message)
    except OSError as e:
        raise CommandError(f"{e.filename or ''}: {e.strerror}" if e.strerror else str(e))


def add_variable_arguments(parser) -> None:
    parser.add_argument(
        '--var', action='append', default=[], metavar='NAME=CIDR[,CIDR...]',
        help='Bind a rule variable; may be repeated',
    )
    parser.add_argument('--vars-file', help='key=value file of var.NAME bindings')


def variable_table(options: Mapping, defaults: Optional[Mapping[str, str]] = None) -> Dict:
    """Bindings from defaults, then --vars-file, then --var flags."""
    table = parse_variables(f"{name}={value}" for name, value in (defaults or {}).items())
    if options.get('vars_file'):
        table.update(load_variables(options['vars_file']))
    table.update(parse_variables(options.get('var') or ()))
    return table


def config_files(explicit: Optional[str]) -> Iterable[str]:
    """DNP3IDS_CONFIG first, then the file named on the command line."""
    return [path for path in (settings.DNP3IDS_CONFIG, explicit) if path]


def flag_overrides(options: Mapping, names: Iterable[str]) -> Dict[str, object]:
    return {name: options[name] for name in names if options.get(name) is not None}


def variable_bindings(options: Mapping) -> Dict[str, str]:
    """--vars-file then --var flags, as NAME -> CIDR list text."""
    return render_variables(variable_table(options))
