"""
Compare two series files.
Run with: python manage.py compare runs/chain8/prepare.jsonl runs/chain8/ed.jsonl
"""
import json

from django.core.management.base import BaseCommand, CommandError

from apps.runs.compare import run_compare
from ntfsim.exceptions import NtfsError


class Command(BaseCommand):
    help = 'Compare the observables of a series against a reference series'

    def add_arguments(self, parser):
        parser.add_argument('series', help='Series under test (.jsonl)')
        parser.add_argument('reference', help='Reference series (.jsonl)')
        parser.add_argument('--tolerance', type=float, default=0.02, help='Absolute tolerance')
        parser.add_argument('--sigmas', type=float, default=3.0, help='Allowed deviation in combined stderr')
        parser.add_argument('--json', action='store_true', help='Print the full report as JSON')

    def handle(self, *args, **options):
        try:
            report = run_compare(options['series'], options['reference'],
                                 tolerance=options['tolerance'], n_sigma=options['sigmas'])
        except (NtfsError, OSError) as e:
            raise CommandError(str(e), returncode=1) from e

        if options['json']:
            self.stdout.write(json.dumps(report.to_dict(), indent=2))
        else:
            for c in report.comparisons:
                line = f'{c.name:>16} [{c.axis}] max |d|={c.max_abs_difference:.4g} ({c.n_points} points)'
                self.stdout.write(self.style.SUCCESS(line) if c.passed else self.style.ERROR(line))
        if not report.passed:
            raise CommandError('series disagree', returncode=2)
        self.stdout.write(self.style.SUCCESS('series agree'))
