"""
Run services - persist runs and execute them through the contour runner
"""
from pathlib import Path
from typing import Optional
import logging

from django.conf import settings

from ntfsim.exceptions import NtfsError, SchemaError

from .checkpoints import Checkpoint
from .config import RunConfig, load_run_config
from .models import RunCheckpoint, SimulationRun
from .orchestrator import ContourRunner, RunResult

logger = logging.getLogger(__name__)


def resolve_output_dir(config: RunConfig, run_id: Optional[int] = None) -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    name = f'run_{run_id}' if run_id is not None else f'seed_{config.seed}'
    return Path(settings.NTFS_OUTPUT_ROOT) / name


def create_run(kind: str, config: RunConfig) -> SimulationRun:
    run = SimulationRun.objects.create(kind=kind, config=config.to_dict(), seed=config.seed, output_dir='')
    run.output_dir = str(resolve_output_dir(config, run.pk))
    run.save(update_fields=['output_dir'])
    logger.info('Created %s run %d in %s', kind, run.pk, run.output_dir)
    return run


def execute_run(run: SimulationRun, checkpoint: Optional[str] = None) -> RunResult:
    """Run a stored configuration; checkpoints written on the way are recorded against it."""
    run.mark_running()

    def record_checkpoint(path: Path, snapshot: Checkpoint):
        RunCheckpoint.objects.create(
            run=run,
            path=str(path),
            segment=snapshot.segment.value,
            beta=snapshot.beta,
            t=snapshot.t,
            step_index=snapshot.step_index,
        )

    try:
        config = load_run_config(run.config)
        runner = ContourRunner(config, Path(run.output_dir), on_checkpoint=record_checkpoint)
        if run.kind == 'prepare':
            result = runner.run_prepare(Path(checkpoint) if checkpoint else None)
        elif run.kind == 'evolve':
            if not checkpoint:
                raise SchemaError('evolve runs start from a checkpoint')
            result = runner.run_evolve(Path(checkpoint))
        elif run.kind == 'ed':
            result = runner.run_ed()
        elif run.kind == 'metts':
            result = runner.run_metts()
        else:
            raise SchemaError(f'unknown run kind {run.kind!r}')
    except NtfsError as e:
        logger.error('Run %d failed: %s', run.pk, e)
        run.mark_error(str(e))
        raise

    run.mark_done(series_path=str(result.series_path), beta=result.beta, t=result.t)
    return result
