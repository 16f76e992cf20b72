"""
Shared plumbing for the run commands
"""
import json
import logging

from django.core.management.base import BaseCommand, CommandError

from ntfsim.exceptions import EvolutionError, NtfsError

from ..config import RunConfig, load_run_config
from ..services import create_run, execute_run
from ..tasks import run_simulation_task

logger = logging.getLogger(__name__)


class RunCommand(BaseCommand):
    """
    Loads a config, records it as a SimulationRun and runs it inline or on
    the Celery worker. Failures map onto exit codes: 1 for configuration and
    contract errors, 3 for evolution failures.
    """
    kind = ''
    queueable = True

    def add_arguments(self, parser):
        parser.add_argument('config', help='Run configuration (JSON)')
        parser.add_argument('--seed', type=int, help='Override the configured seed')
        parser.add_argument('--output', help='Output directory')
        parser.add_argument('--preset', choices=['desk', 'paper', 'full'], help='Accuracy preset (full is an alias of paper)')
        if self.queueable:
            parser.add_argument('--queue', action='store_true', help='Submit to the Celery worker instead')

    def overrides(self, options):
        return {'seed': options.get('seed'), 'output_dir': options.get('output')}

    def load(self, options) -> RunConfig:
        try:
            return load_run_config(options['config'], preset=options.get('preset'),
                                   overrides=self.overrides(options))
        except NtfsError as e:
            raise CommandError(self.describe(e), returncode=1) from e

    def describe(self, error: NtfsError) -> str:
        if error.diagnostics:
            return f'{error}\n{json.dumps(error.diagnostics, indent=2, default=str)}'
        return str(error)

    def handle(self, *args, **options):
        config = self.load(options)
        run = create_run(self.kind, config)
        checkpoint = options.get('checkpoint')
        if options.get('queue'):
            run_simulation_task.delay(run.id, checkpoint)
            self.stdout.write(self.style.SUCCESS(f'Queued {self.kind} run {run.id} -> {run.output_dir}'))
            return

        self.stdout.write(self.style.MIGRATE_HEADING(f'{self.kind} run {run.id} -> {run.output_dir}'))
        try:
            result = execute_run(run, checkpoint)
        except EvolutionError as e:
            raise CommandError(self.describe(e), returncode=3) from e
        except NtfsError as e:
            raise CommandError(self.describe(e), returncode=1) from e

        self.stdout.write(self.style.SUCCESS(
            f'{self.kind}: beta={result.beta:.4f} t={result.t:.4f} in {result.total_time:.1f}s'
        ))
        self.stdout.write(f'  series: {result.series_path}')
        if result.checkpoint_path:
            self.stdout.write(f'  checkpoint: {result.checkpoint_path}')
        for key, value in result.extra.items():
            self.stdout.write(f'  {key}: {value}')
