"""
Sample batches - configurations plus provenance
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from apps.thermofield.algebra import AuxBasis, DoubledConfiguration
from ntfsim.exceptions import ContractViolation


class SampleSource(str, Enum):
    BORN_METROPOLIS = 'born_metropolis'
    BORN_DIRECT = 'born_direct'
    PRIOR_Q = 'prior_q'
    ENUMERATION = 'enumeration'


WEIGHTED_SOURCES = (SampleSource.PRIOR_Q, SampleSource.ENUMERATION)


@dataclass
class SampleBatch:
    """
    configs are int8 arrays of shape (B, 2N).

    weights hold the normalized |psi|^2 for enumeration batches and the
    importance factor 1 / q(S) for prior batches. Metropolis batches are
    stored chain-major with n_chains equal-length chains.
    """
    configs: np.ndarray
    basis: AuxBasis
    source: SampleSource
    log_amplitudes: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    n_chains: int = 1
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.configs = np.asarray(self.configs, dtype=np.int8)
        self.basis = AuxBasis(self.basis)
        self.source = SampleSource(self.source)
        if self.configs.ndim != 2 or self.configs.shape[1] % 2:
            raise ContractViolation(f'bad configuration array shape {self.configs.shape}')
        if (self.weights is not None) != (self.source in WEIGHTED_SOURCES):
            raise ContractViolation(f'weights must be present exactly for {[s.value for s in WEIGHTED_SOURCES]}')
        if self.weights is not None and len(self.weights) != len(self.configs):
            raise ContractViolation('one weight per configuration')
        if self.log_amplitudes is not None and len(self.log_amplitudes) != len(self.configs):
            raise ContractViolation('one cached log-amplitude per configuration')
        if len(self.configs) % self.n_chains:
            raise ContractViolation('chains must have equal length')

    @property
    def size(self) -> int:
        return len(self.configs)

    @property
    def n_sites(self) -> int:
        return self.configs.shape[1] // 2

    @property
    def is_markov(self) -> bool:
        return self.source == SampleSource.BORN_METROPOLIS

    def configurations(self) -> List[DoubledConfiguration]:
        return [DoubledConfiguration.from_array(row, self.basis) for row in self.configs]

    def chain_view(self, values: np.ndarray) -> np.ndarray:
        """Per-sample values reshaped to (n_chains, chain_length)."""
        return np.asarray(values).reshape(self.n_chains, -1)

    def select(self, mask: np.ndarray) -> 'SampleBatch':
        """Sub-batch keeping provenance; chain layout is dropped."""
        return SampleBatch(
            configs=self.configs[mask],
            basis=self.basis,
            source=self.source,
            log_amplitudes=None if self.log_amplitudes is None else self.log_amplitudes[mask],
            weights=None if self.weights is None else self.weights[mask],
            diagnostics=dict(self.diagnostics),
        )

    def summary(self) -> Dict[str, Any]:
        return {
            'source': self.source.value,
            'basis': self.basis.value,
            'size': self.size,
            'n_chains': self.n_chains,
            **self.diagnostics,
        }


def concatenate(batches: Sequence[SampleBatch]) -> SampleBatch:
    """Ordered concatenation; all batches must share source and basis."""
    if not batches:
        raise ContractViolation('nothing to concatenate')
    first = batches[0]
    if any(b.source != first.source or b.basis != first.basis for b in batches):
        raise ContractViolation('batches differ in source or basis')
    chain_lengths = {b.size // b.n_chains for b in batches}
    def _cat(attr):
        parts = [getattr(b, attr) for b in batches]
        return None if any(p is None for p in parts) else np.concatenate(parts)
    return SampleBatch(
        configs=np.concatenate([b.configs for b in batches]),
        basis=first.basis,
        source=first.source,
        log_amplitudes=_cat('log_amplitudes'),
        weights=_cat('weights'),
        n_chains=sum(b.n_chains for b in batches) if len(chain_lengths) == 1 else 1,
    )
