"""
Monte Carlo estimators for <O (x) 1> on a doubled-space batch
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple
import logging

import numpy as np

from apps.ansatz.base import VariationalState
from apps.evolution.local_energy import local_values
from apps.lattice.pauli import PauliOperator
from apps.sampling.batch import SampleBatch, SampleSource
from apps.thermofield.algebra import lift_physical
from ntfsim.exceptions import ContractViolation

logger = logging.getLogger(__name__)

# stop doubling bins once stderr changes by less than this
BINNING_PLATEAU = 0.05
MIN_BINS = 16
HERMITIAN_ABS_TOLERANCE = 1e-10


class Reduction(str, Enum):
    SINGLE_PAIR = 'single_pair'
    BOND_AVERAGE = 'bond_average'
    SITE_AVERAGE = 'site_average'


@dataclass(frozen=True)
class ObservableSpec:
    """`operator` already includes the averaging named by `reduction`."""
    name: str
    operator: PauliOperator
    reduction: Reduction

    def __post_init__(self):
        object.__setattr__(self, 'reduction', Reduction(self.reduction))
        if not isinstance(self.operator, PauliOperator):
            raise ContractViolation('observables are physical Pauli operators')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'reduction': self.reduction.value,
            'operator': self.operator.to_dict(),
        }


@dataclass
class EstimatorResult:
    mean: complex
    stderr: float
    n: int
    tau: float = 0.5
    skipped: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mean': self.mean.real,
            'mean_imag': self.mean.imag,
            'stderr': self.stderr,
            'n': self.n,
            'tau': self.tau,
            'skipped': self.skipped,
            **self.diagnostics,
        }


def binning_error(chains: np.ndarray) -> Tuple[float, float]:
    """
    Binning analysis over (n_chains, length) complex series.

    Bin size doubles until the error estimate plateaus; returns
    (stderr, tau) with tau = (stderr / naive stderr)^2 / 2.
    """
    n_chains, length = chains.shape
    total = n_chains * length
    flat = chains.reshape(-1)
    naive = float(np.sqrt(np.mean(np.abs(flat - flat.mean()) ** 2) / max(total - 1, 1)))
    if naive == 0.0:
        return 0.0, 0.5

    stderr, size = naive, 1
    while True:
        size *= 2
        n_bins = length // size
        if n_bins * n_chains < MIN_BINS:
            break
        bins = chains[:, :n_bins * size].reshape(n_chains, n_bins, size).mean(axis=2).reshape(-1)
        candidate = float(np.sqrt(np.mean(np.abs(bins - bins.mean()) ** 2) / (bins.size - 1)))
        change = abs(candidate - stderr) / stderr
        stderr = max(stderr, candidate)
        if change < BINNING_PLATEAU:
            break
    return stderr, 0.5 * (stderr / naive) ** 2


def estimate(state: VariationalState, spec: ObservableSpec, batch: SampleBatch) -> EstimatorResult:
    if spec.operator.n_sites != state.n_sites:
        raise ContractViolation(f'{spec.name} acts on {spec.operator.n_sites} sites, state has {state.n_sites}')
    if batch.basis != state.basis:
        raise ContractViolation('batch and state live in different auxiliary bases')

    log_psi = batch.log_amplitudes
    if log_psi is None:
        log_psi = state.log_amplitude(batch.configs)
    keep = np.isfinite(log_psi.real)
    if batch.source == SampleSource.ENUMERATION:
        keep &= batch.weights > 0
        skipped = 0
    else:
        skipped = int((~keep).sum())
        if skipped:
            logger.warning('%s: skipped %d zero-amplitude samples', spec.name, skipped)
    if not np.any(keep):
        raise ContractViolation('batch holds no configuration with nonzero amplitude')

    values = local_values(state, batch.configs[keep], lift_physical(spec.operator), log_psi=log_psi[keep])
    n = int(values.size)
    tau = 0.5

    if batch.source == SampleSource.ENUMERATION:
        w = batch.weights[keep] / batch.weights[keep].sum()
        mean = complex(w @ values)
        stderr = 0.0
    elif batch.source == SampleSource.PRIOR_Q:
        log_w = 2.0 * log_psi.real[keep] + np.log(batch.weights[keep])
        w = np.exp(log_w - log_w.max())
        w /= w.sum()
        mean = complex(w @ values)
        stderr = float(np.sqrt(np.sum(w ** 2 * np.abs(values - mean) ** 2)))
    elif batch.is_markov and not skipped:
        mean = complex(values.mean())
        stderr, tau = binning_error(batch.chain_view(values))
    else:
        mean = complex(values.mean())
        stderr = float(np.sqrt(np.mean(np.abs(values - mean) ** 2) / max(n - 1, 1)))

    diagnostics = {}
    if spec.operator.is_hermitian() and abs(mean.imag) > max(3.0 * stderr, HERMITIAN_ABS_TOLERANCE):
        logger.warning('%s: imaginary part %.3e exceeds 3 sigma (%.3e)', spec.name, mean.imag, stderr)
        diagnostics['hermitian_warning'] = True
    return EstimatorResult(mean=mean, stderr=stderr, n=n, tau=tau, skipped=skipped, diagnostics=diagnostics)
