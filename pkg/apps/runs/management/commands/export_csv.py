from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.runs.series import DEFAULT_SMOOTHING_WINDOW, export_csv
from ntfsim.exceptions import NtfsError


class Command(BaseCommand):
    help = 'Export a series file as CSV with smoothed observable columns'

    def add_arguments(self, parser):
        parser.add_argument('series', help='Series file (.jsonl)')
        parser.add_argument('--output', help='CSV path (defaults next to the series)')
        parser.add_argument('--smooth', type=int, default=DEFAULT_SMOOTHING_WINDOW,
                            help='Rolling window; 0 or 1 disables smoothing')

    def handle(self, *args, **options):
        series = Path(options['series'])
        output = Path(options['output']) if options['output'] else series.with_suffix('.csv')
        try:
            frame = export_csv(series, output, smooth_window=options['smooth'])
        except (NtfsError, OSError) as e:
            raise CommandError(str(e), returncode=1) from e
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(frame)} rows to {output}'))
