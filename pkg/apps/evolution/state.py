"""
Evolution settings and contour position
"""
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional

from apps.ansatz.base import VariationalState
from ntfsim.exceptions import ContractViolation

from .integrators import Integrator


class Segment(str, Enum):
    C1_PITE = 'c1_pite'
    C2_SR = 'c2_sr'
    C3_TVMC = 'c3_tvmc'


class Backend(str, Enum):
    SAMPLED = 'sampled'
    ENUMERATION = 'enumeration'


@dataclass(frozen=True)
class SamplerSettings:
    n_chains: int = 32
    sweep_factor: int = 10
    burn_in: int = 100
    workers: int = 1
    # autoregressive states sample directly unless this is False
    direct: bool = True


@dataclass(frozen=True)
class PiteSettings:
    kernel_base: float = 3.0
    max_iterations: int = 500
    learning_rate: float = 0.05
    momentum: float = 0.9
    propagator_order: int = 2
    infidelity_threshold: float = 1e-6
    n_samples: int = 16000


@dataclass(frozen=True)
class EvolutionConfig:
    """
    step is the purification-time increment for imaginary time (beta moves by
    twice that) and dt for real time.
    """
    step: float
    integrator: Integrator = Integrator.RK2
    svd_atol: float = 1e-7
    samples_per_step: int = 8000
    backend: Backend = Backend.SAMPLED
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    pite: PiteSettings = field(default_factory=PiteSettings)
    max_retries: int = 3
    retry_step_factor: float = 0.5
    energy_jump_factor: float = 10.0
    energy_floor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'integrator', Integrator(self.integrator))
        object.__setattr__(self, 'backend', Backend(self.backend))
        if not self.step > 0:
            raise ContractViolation(f'step must be positive, got {self.step}')
        if not self.svd_atol > 0:
            raise ContractViolation(f'svd_atol must be positive, got {self.svd_atol}')

    def with_step(self, step: float) -> 'EvolutionConfig':
        return replace(self, step=step)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['integrator'] = self.integrator.value
        data['backend'] = self.backend.value
        return data


@dataclass(frozen=True)
class EvolutionState:
    state: VariationalState
    beta: float = 0.0
    t: float = 0.0
    segment: Segment = Segment.C1_PITE
    step_index: int = 0
    energy_magnitude: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False)
    # measurement batch of the current state, not persisted
    last_batch: Any = field(default=None, compare=False, repr=False)

    def advance(self, state: VariationalState, d_beta: float = 0.0, dt: float = 0.0, **changes) -> 'EvolutionState':
        if d_beta < 0 or dt < 0:
            raise ContractViolation('the contour only moves forward')
        return replace(
            self,
            state=state,
            beta=self.beta + d_beta,
            t=self.t + dt,
            step_index=self.step_index + 1,
            **changes,
        )

    def with_segment(self, segment: Segment) -> 'EvolutionState':
        return replace(self, segment=Segment(segment), energy_magnitude=None, last_batch=None)
