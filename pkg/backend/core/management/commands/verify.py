import argparse
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ConfigurationError
from core.serializers import SUITE_NAMES
from core.services import ConfigService, SuiteService


class VerificationFailed(CommandError):
    """A suite ran to completion and at least one check failed"""

    def __init__(self, message: str):
        super().__init__(message, returncode=1)


def sample_count(value: str) -> int:
    """Accepts integers and integral floats such as 1e6"""
    try:
        count = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid sample count '{value}'")
    if count < 1 or count != int(count):
        raise argparse.ArgumentTypeError(f"sample count must be a positive integer, got '{value}'")
    return int(count)


class Command(BaseCommand):
    help = 'Run a verification suite for the resonant collision operators and write its report'

    def add_arguments(self, parser):
        parser.add_argument('suite_name', nargs='?', choices=SUITE_NAMES, help='Suite to run')
        parser.add_argument('--suite', dest='suite_option', choices=SUITE_NAMES,
                            help='Suite to run (alternative to the positional argument)')
        parser.add_argument('--config', help='JSON run configuration, relative to the config directory')
        parser.add_argument('--samples', type=sample_count, help='Monte Carlo sample count')
        parser.add_argument('--seed', type=int, help='Root random seed')
        parser.add_argument('--threads', type=int, help='Worker threads for Monte Carlo shards')
        parser.add_argument('--out', help='Directory for the JSON report and CSV tables')
        parser.add_argument('--no-csv', action='store_true', help='Skip the CSV side tables')

    def handle(self, *args, **options):
        overrides = {'samples': options['samples'], 'seed': options['seed'], 'threads': options['threads']}
        try:
            run = ConfigService.load(options['config'], overrides)
        except ConfigurationError as e:
            details = f': {e.details}' if e.details else ''
            raise CommandError(f'{e}{details}', returncode=2)

        suite = options['suite_name'] or options['suite_option'] or run.suite
        if suite is None:
            raise CommandError('No suite given on the command line or in the configuration', returncode=2)

        self.stdout.write(f'Running {suite} (samples={run.mc.samples}, seed={run.mc.seed}, '
                          f'threads={run.mc.threads})')
        report = SuiteService.run(suite, run)

        out_dir = Path(options['out'] or run.out or settings.VERIFY_REPORT_DIR)
        written = report.write(out_dir, write_csv=not options['no_csv'])
        self.stdout.write(f'Report written to {written[0]} ({len(written) - 1} tables)')

        if not report.passed:
            failed = report.failed_checks
            for name in failed:
                self.stderr.write(f'  FAILED {name}')
            raise VerificationFailed(f'{suite}: {len(failed)} check(s) failed')

        self.stdout.write(self.style.SUCCESS(f'{suite}: all checks passed in {report.wall_time:.1f}s'))
