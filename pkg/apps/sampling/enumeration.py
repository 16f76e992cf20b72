"""
Exact backend - every doubled configuration with its Born weight
"""
import numpy as np
from scipy.special import logsumexp

from apps.ansatz.base import VariationalState
from apps.thermofield.algebra import doubled_configurations
from ntfsim.exceptions import CapacityError

from .batch import SampleBatch, SampleSource

# 4^N <= 2^24
MAX_ENUMERATION_SITES = 12


def enumerate_all(state: VariationalState, max_sites: int = MAX_ENUMERATION_SITES) -> SampleBatch:
    if state.n_sites > max_sites:
        raise CapacityError(
            f'enumeration of {state.n_sites} sites exceeds the 4^{max_sites} cap'
        )
    configs = doubled_configurations(state.n_sites)
    log_psi = state.log_amplitude(configs)
    log_born = 2.0 * log_psi.real
    finite = np.isfinite(log_born)
    weights = np.zeros(len(configs))
    weights[finite] = np.exp(log_born[finite] - logsumexp(log_born[finite]))
    return SampleBatch(
        configs=configs,
        basis=state.basis,
        source=SampleSource.ENUMERATION,
        log_amplitudes=log_psi,
        weights=weights,
        diagnostics={'support_size': int(finite.sum())},
    )
