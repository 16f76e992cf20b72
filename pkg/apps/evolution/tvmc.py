"""
C3 - real-time TDVP under the thermofield Hamiltonian
"""
from typing import Optional

import numpy as np

from apps.thermofield.algebra import ThermofieldOperator
from ntfsim.exceptions import ContractViolation

from .state import EvolutionConfig, EvolutionState, Segment
from .tdvp import tdvp_step


def tvmc_step(evolution_state: EvolutionState, thermofield_op: ThermofieldOperator, config: EvolutionConfig,
              rng: Optional[np.random.Generator] = None) -> EvolutionState:
    """Solves G theta-dot = -i F; states in the auxiliary X basis need a rotated operator."""
    if evolution_state.segment != Segment.C3_TVMC:
        raise ContractViolation(f'tvmc_step needs segment c3_tvmc, got {evolution_state.segment.value}')
    return tdvp_step(evolution_state, thermofield_op, config, rng, real_time=True)
