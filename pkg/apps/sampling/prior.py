"""
Hamming-kernel prior around the identity support.

q(S) = prod_i q_i(S_i); a local pair on the support gets weight 1 + 1/b
(itself at distance 0, the other support pair at distance 1), an off-support
pair gets 2/b. Local outcomes are indexed k = 2 b(sigma) + b(s).
"""
from dataclasses import dataclass

import numpy as np

from apps.thermofield.algebra import (
    AuxBasis, DoubledConfiguration, configs_from_local, local_indices,
)
from ntfsim.exceptions import BasisMismatchError, ContractViolation

from .batch import SampleBatch, SampleSource

DEFAULT_KERNEL_BASE = 3.0
SUPPORT = np.array([True, False, False, True])


@dataclass(frozen=True)
class PriorConfig:
    n_sites: int
    kernel_base: float = DEFAULT_KERNEL_BASE

    def __post_init__(self):
        if not self.kernel_base > 1.0:
            raise ContractViolation(f'kernel base must exceed 1, got {self.kernel_base}')
        if self.n_sites < 1:
            raise ContractViolation('prior needs at least one site')

    def local_distribution(self) -> np.ndarray:
        b = self.kernel_base
        weights = np.where(SUPPORT, 1.0 + 1.0 / b, 2.0 / b)
        return weights / weights.sum()


def log_prior_density(configs: np.ndarray, prior: PriorConfig) -> np.ndarray:
    configs = np.atleast_2d(configs)
    if configs.shape[1] != 2 * prior.n_sites:
        raise ContractViolation('configuration length does not match the prior')
    log_local = np.log(prior.local_distribution())
    return log_local[local_indices(configs)].sum(axis=1)


def prior_density(config: DoubledConfiguration, prior: PriorConfig) -> float:
    if config.basis != AuxBasis.Z:
        raise BasisMismatchError('the prior is defined in the auxiliary Z basis')
    return float(np.exp(log_prior_density(config.as_array()[None, :], prior)[0]))


def sample_prior(prior: PriorConfig, n_samples: int, rng: np.random.Generator) -> SampleBatch:
    """Independent per-site draws; weights carry 1 / q(S)."""
    local = rng.choice(4, size=(n_samples, prior.n_sites), p=prior.local_distribution())
    configs = configs_from_local(local)
    log_q = log_prior_density(configs, prior)
    off_support = (~SUPPORT[local]).sum(axis=1)
    return SampleBatch(
        configs=configs,
        basis=AuxBasis.Z,
        source=SampleSource.PRIOR_Q,
        weights=np.exp(-log_q),
        diagnostics={'mean_off_support': float(off_support.mean())},
    )
