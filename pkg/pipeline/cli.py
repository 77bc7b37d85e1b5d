"""
argv -> exit code entry point over the pipeline management commands.

    run_cli(['simulate', '--out', 'run1'])
    run_cli(['fit', 'run1/data.csv', '--out', 'run1'])

is equivalent to ``python manage.py simulate --out run1`` and so on, but
returns the exit status (0 success, 1 usage, 2 data, 3 numerical) instead of
terminating the interpreter.
"""
import os
import sys

import django
from django.core.management import load_command_class

COMMANDS = ('simulate', 'fit', 'forecast', 'select', 'metrics', 'backtest')
PROG = 'tvvarcast'


def _usage(stream):
    stream.write(f'usage: {PROG} {{{",".join(COMMANDS)}}} [options]\n')


def run_cli(argv=None):
    """Run one subcommand and return its exit code."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tvvarcast.settings')
    django.setup()

    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help'):
        _usage(sys.stdout if argv else sys.stderr)
        return 0 if argv else 1
    name = argv[0]
    if name not in COMMANDS:
        _usage(sys.stderr)
        sys.stderr.write(f'{PROG}: error: unknown command {name!r}\n')
        return 1

    command = load_command_class('pipeline', name)
    try:
        command.run_from_argv([PROG, name, *argv[1:]])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == '__main__':
    main()
