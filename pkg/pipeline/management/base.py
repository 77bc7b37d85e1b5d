"""
Shared plumbing of the tvvarcast management commands.

Every command accepts the global flags --config, --out, --seed, --verbose and
--jobs, loads a RunConfig and maps project errors onto exit codes:

    1  usage or configuration error
    2  data error
    3  numerical failure
"""
import logging
import sys
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError, CommandParser

from dynamics.exceptions import ConfigurationError, DataError, InfeasibleAllocation, NumericalBreakdown

from ..config import load_run_config
from ..frames import load_csv, to_returns

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

APP_LOGGERS = ('dynamics', 'portfolio', 'pipeline')


class UsageErrorParser(CommandParser):
    """CommandParser whose usage errors exit with status 1."""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')
        raise CommandError(f'Error: {message}', returncode=EXIT_USAGE)


def comma_list(cast):
    """argparse type for comma-separated lists."""
    def parse(text):
        return [cast(item) for item in text.split(',') if item.strip()]
    parse.__name__ = f'{cast.__name__} list'
    return parse


class RunCommand(BaseCommand):
    """Base class: global flags, RunConfig loading and error-to-exit-code mapping."""

    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = UsageErrorParser
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON run configuration')
        parser.add_argument('--out', help='output directory (default: TVVAR_OUTPUT_DIR)')
        parser.add_argument('--seed', type=int, help='random seed')
        parser.add_argument('--verbose', action='store_true', help='debug logging')
        parser.add_argument('--jobs', type=int, help='worker threads for grid evaluations')

    def config_overrides(self, options):
        """{section: {key: value}} taken from command-specific flags."""
        return {}

    def handle(self, *args, **options):
        if options.get('verbose'):
            for name in APP_LOGGERS:
                logging.getLogger(name).setLevel(logging.DEBUG)

        try:
            overrides = self.config_overrides(options)
            overrides.setdefault('run', {}).update({
                'output_dir': options.get('out'),
                'seed': options.get('seed'),
                'jobs': options.get('jobs'),
            })
            run_config = load_run_config(options.get('config'), overrides)
            out = Path(run_config.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            forwarded = {key: value for key, value in options.items() if key != 'out'}
            self.run(run_config, out, **forwarded)
        except ConfigurationError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
        except DataError as exc:
            raise CommandError(str(exc), returncode=EXIT_DATA) from exc
        except (NumericalBreakdown, InfeasibleAllocation) as exc:
            raise CommandError(str(exc), returncode=EXIT_NUMERICAL) from exc

    def run(self, run_config, out, **options):
        raise NotImplementedError('subclasses of RunCommand must provide a run() method')

    def load_series(self, run_config, path):
        """SeriesFrame from ``path``, turned into returns when data.transform asks for it."""
        frame = load_csv(path, time_column=run_config.data['time_column'])
        if run_config.data['transform'] != 'none':
            frame = to_returns(frame, run_config.data['transform'])
        return frame

    def report(self, message):
        self.stdout.write(message)
