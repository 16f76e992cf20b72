"""
Celery tasks for long simulation runs
"""
import logging

from celery import shared_task

from ntfsim.exceptions import NtfsError

from .models import SimulationRun
from .services import execute_run

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_simulation_task(self, run_id: int, checkpoint: str = None):
    logger.info('Task %s: starting run %d', self.request.id, run_id)
    run = SimulationRun.objects.get(id=run_id)
    try:
        result = execute_run(run, checkpoint)
    except NtfsError as e:
        # status and message are already on the run
        return {'status': 'error', 'run_id': run_id, 'error': str(e)}
    return {'status': 'done', 'run_id': run_id, **result.to_dict()}
