"""
Local estimators of doubled-space operators.

    E_loc(x) = sum_x' <x|O|x'> psi(x') / psi(x)
"""
from typing import Optional

import numpy as np

from apps.ansatz.base import ConfigInput, VariationalState
from apps.thermofield.algebra import AuxBasis, Combination, ThermofieldOperator
from ntfsim.exceptions import BasisMismatchError, DomainError


def check_operator_basis(state: VariationalState, op: ThermofieldOperator):
    if op.combination != Combination.DIFFERENCE:
        return
    if state.basis == AuxBasis.X and not op.aux_rotated:
        raise BasisMismatchError('rotate the auxiliary part before using it in the X basis')
    if state.basis == AuxBasis.Z and op.aux_rotated:
        raise BasisMismatchError('rotated operator used in the auxiliary Z basis')


def local_values(state: VariationalState, configs: np.ndarray, op: ThermofieldOperator,
                 log_psi: Optional[np.ndarray] = None) -> np.ndarray:
    """Vector of local values; every configuration must have nonzero amplitude."""
    check_operator_basis(state, op)
    configs = np.atleast_2d(configs)
    if log_psi is None:
        log_psi = state.log_amplitude(configs)
    zeros = np.isneginf(log_psi.real)
    if np.any(zeros):
        raise DomainError(f'{int(zeros.sum())} configuration(s) with zero amplitude', {'zero_count': int(zeros.sum())})

    batch, width = configs.shape
    conn, amps = op.connected(configs)
    if conn.shape[1] == 0:
        return np.zeros(batch, dtype=np.complex128)
    log_conn = state.log_amplitude(conn.reshape(-1, width)).reshape(batch, -1)
    ratios = np.zeros(log_conn.shape, dtype=np.complex128)
    finite = np.isfinite(log_conn.real)
    ratios[finite] = np.exp(log_conn[finite] - np.broadcast_to(log_psi[:, None], log_conn.shape)[finite])
    return (amps * ratios).sum(axis=1)


def local_energy(state: VariationalState, config: ConfigInput, op: ThermofieldOperator) -> complex:
    array, _ = state._as_batch(config)
    return complex(local_values(state, array, op)[0])
