"""
Step-rejection retry policy
"""
from dataclasses import dataclass
from typing import Callable, TypeVar
import logging

from ntfsim.exceptions import EvolutionError, StepRejected

logger = logging.getLogger(__name__)

T = TypeVar('T')


@dataclass(frozen=True)
class RetryPolicy:
    """Rejected steps are retried with the step scaled by step_factor each time."""
    max_retries: int = 3
    step_factor: float = 0.5

    def get_step(self, base_step: float, attempt: int) -> float:
        return base_step * (self.step_factor ** attempt)


def run_with_retry(policy: RetryPolicy, base_step: float, attempt_step: Callable[[float], T], label: str = 'step') -> T:
    last_error = None
    for attempt in range(policy.max_retries + 1):
        step = policy.get_step(base_step, attempt)
        try:
            return attempt_step(step)
        except StepRejected as e:
            last_error = e
            logger.warning('%s rejected at size %.3e (attempt %d/%d): %s',
                           label, step, attempt + 1, policy.max_retries + 1, e)

    raise EvolutionError(
        f'{label} rejected {policy.max_retries + 1} times; last: {last_error}',
        {'retries': policy.max_retries, 'last_step': policy.get_step(base_step, policy.max_retries),
         **(last_error.diagnostics if last_error else {})},
    )
