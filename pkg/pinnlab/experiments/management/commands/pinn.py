import sys
from functools import partial

from django.core.management.base import BaseCommand, CommandError, CommandParser

from core.exceptions import ConfigurationError, PinnError
from experiments.checks import cmd_check
from experiments.config import PROFILES, load_config
from experiments.pipeline import cmd_benchmark, cmd_evaluate, cmd_tables, cmd_train
from problems.equations import PROBLEMS

SUBCOMMANDS = {
    'train': 'Train a network and write checkpoint, history and manifest.',
    'evaluate': 'Error grid, norms and gradients of a checkpoint against the exact solution.',
    'tables': 'Published comparison table with the checkpoint as the PINN column.',
    'benchmark': 'Point-by-point inference timing with a linear fit.',
    'check': 'Derivative and exact-solution self-checks.',
}


def _argument_error(parser, message):
    """Bad flags are validation errors: exit code 1, never argparse's 2."""
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(ConfigurationError.exit_code, f"{parser.prog}: error: {message}\n")
    raise CommandError(f"Error: {message}", returncode=ConfigurationError.exit_code)


class SubcommandParser(CommandParser):
    def error(self, message):
        _argument_error(self, message)


class Command(BaseCommand):
    help = 'Physics-informed network runs: train, evaluate, tables, benchmark, check.'

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = partial(_argument_error, parser)
        return parser

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True, parser_class=SubcommandParser)
        for name, description in SUBCOMMANDS.items():
            sub = subparsers.add_parser(name, help=description, description=description)
            sub.add_argument('--config', metavar='PATH', help='INI run configuration')
            sub.add_argument('--problem', choices=PROBLEMS)
            sub.add_argument('--seed', type=int)
            sub.add_argument('--profile', choices=list(PROFILES), default='paper')
            sub.add_argument('--out', metavar='DIR', help='output directory')
            sub.add_argument('--checkpoint', metavar='PATH',
                             help='checkpoint to load (default: checkpoint.bin in the output directory)')

    def handle(self, *args, **options):
        try:
            self._dispatch(options)
        except PinnError as e:
            raise CommandError(str(e), returncode=e.exit_code) from e

    def _dispatch(self, options):
        subcommand = options['subcommand']
        if subcommand == 'check':
            for result in cmd_check(seed=options['seed'] or 0):
                self.stdout.write(str(result))
            self.stdout.write(self.style.SUCCESS('All self-checks passed'))
            return

        config = load_config(options['config'], problem=options['problem'],
                             profile=options['profile'], seed=options['seed'], out=options['out'])
        if subcommand == 'train':
            outcome = cmd_train(config)
            self.stdout.write(self.style.SUCCESS(outcome.summary))
        elif subcommand == 'evaluate':
            outcome = cmd_evaluate(config, options['checkpoint'])
            self.stdout.write(self.style.SUCCESS(outcome.summary))
        elif subcommand == 'tables':
            table = cmd_tables(config, options['checkpoint'])
            self.stdout.write(table.render())
        elif subcommand == 'benchmark':
            outcome = cmd_benchmark(config, options['checkpoint'])
            for points, seconds, fitted in outcome.record.rows():
                self.stdout.write(f"{points:>6} points  {seconds:9.4f}s  (fit {fitted:9.4f}s)")
            self.stdout.write(self.style.SUCCESS(outcome.summary))
