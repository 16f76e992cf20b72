"""
C2 - stochastic reconfiguration (imaginary-time TDVP)
"""
from typing import Optional

import numpy as np

from apps.lattice.pauli import PauliOperator
from apps.thermofield.algebra import lift_physical
from ntfsim.exceptions import ContractViolation

from .state import EvolutionConfig, EvolutionState, Segment
from .tdvp import tdvp_step


def sr_step(evolution_state: EvolutionState, hamiltonian: PauliOperator, config: EvolutionConfig,
            rng: Optional[np.random.Generator] = None) -> EvolutionState:
    """
    One step of e^{-tau H (x) 1} in the TDVP sense; beta advances by 2 tau.

    Rejected steps are retried with a halved step, so the advance can be
    smaller than config.step.
    """
    if evolution_state.segment != Segment.C2_SR:
        raise ContractViolation(f'sr_step needs segment c2_sr, got {evolution_state.segment.value}')
    return tdvp_step(evolution_state, lift_physical(hamiltonian), config, rng, real_time=False)
