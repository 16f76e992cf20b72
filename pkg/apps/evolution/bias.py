"""
Force bias from zero-amplitude configurations.

Born samples never visit configurations with psi = 0, so the sampled force
misses

    B_k = sum_{x: psi(x) = 0} d_k psi*(x) (H psi)(x) / <psi|psi>

which is all there is at the identity state in the auxiliary Z basis.
"""
from dataclasses import dataclass
from typing import Any, Dict, Union

import numpy as np

from apps.ansatz.base import VariationalState
from apps.lattice.pauli import PauliOperator
from apps.sampling.batch import SampleBatch, SampleSource
from apps.thermofield.algebra import ThermofieldOperator, dense_thermofield, doubled_configurations, lift_physical
from ntfsim.exceptions import CapacityError, ContractViolation

from .qgt import estimate_qgt_forces

MAX_BIAS_SITES = 4


@dataclass
class BiasReport:
    standard_force_norm: float
    bias_norm: float
    n_zeros: int

    @property
    def ratio(self) -> float:
        if self.standard_force_norm > 0:
            return self.bias_norm / self.standard_force_norm
        return np.inf if self.bias_norm > 0 else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'standard_force_norm': self.standard_force_norm,
            'bias_norm': self.bias_norm,
            'n_zeros': self.n_zeros,
            'ratio': self.ratio,
        }


def bias_term_report(state: VariationalState, batch: SampleBatch,
                     hamiltonian: Union[PauliOperator, ThermofieldOperator]) -> BiasReport:
    if batch.source != SampleSource.ENUMERATION:
        raise ContractViolation('the bias report needs an enumeration batch')
    if state.n_sites > MAX_BIAS_SITES:
        raise CapacityError(f'bias report is limited to {MAX_BIAS_SITES} sites, got {state.n_sites}')
    op = lift_physical(hamiltonian) if isinstance(hamiltonian, PauliOperator) else hamiltonian

    forces = estimate_qgt_forces(state, batch, op)
    configs = doubled_configurations(state.n_sites)
    psi, d_psi = state.amplitude_derivatives(configs)
    h_psi = dense_thermofield(op) @ psi
    zeros = psi == 0
    norm = float(np.sum(np.abs(psi) ** 2))
    bias = (d_psi[zeros].conj() * h_psi[zeros][:, None]).sum(axis=0) / norm
    return BiasReport(
        standard_force_norm=float(np.linalg.norm(forces.F)),
        bias_norm=float(np.linalg.norm(bias)),
        n_zeros=int(zeros.sum()),
    )
