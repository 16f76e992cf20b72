"""
Direct (ancestral) sampling of autoregressive states
"""
import numpy as np

from apps.ansatz.arnno import ArnnoState
from apps.ansatz.base import VariationalState
from ntfsim.exceptions import ContractViolation

from .batch import SampleBatch, SampleSource


def direct_sample(state: VariationalState, n_samples: int, rng: np.random.Generator) -> SampleBatch:
    if not isinstance(state, ArnnoState):
        raise ContractViolation(f'direct sampling needs an autoregressive state, got {state.architecture.value}')
    configs = state.ancestral_sample(n_samples, rng)
    return SampleBatch(
        configs=configs,
        basis=state.basis,
        source=SampleSource.BORN_DIRECT,
        log_amplitudes=state.log_amplitude(configs),
    )
