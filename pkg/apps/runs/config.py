"""
Run configuration: JSON file -> preset merge -> serializer -> frozen dataclasses
"""
from copy import deepcopy
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union
import json
import logging

import numpy as np
from django.conf import settings

from apps.ansatz.arnno import ArnnoXState, ArnnoZState
from apps.ansatz.base import Architecture, VariationalState
from apps.ansatz.mean_field import wrap_mean_field
from apps.ansatz.rbmo import RbmoState
from apps.evolution.integrators import Integrator
from apps.evolution.state import EvolutionConfig, PiteSettings, SamplerSettings
from apps.lattice.lattice import Lattice, build_lattice
from apps.lattice.pauli import PauliOperator, build_tfim
from apps.observables.estimators import Reduction
from ntfsim.exceptions import SchemaError

from .serializers import RunConfigSerializer

logger = logging.getLogger(__name__)

# desk divides the sample budgets by 8 and relaxes the p-ITE threshold
PRESETS: Dict[str, Dict[str, Any]] = {
    'desk': {
        'sampler': {'n_chains': 32, 'sweep_factor': 10, 'burn_in': 100},
        'pite_until': 0.1,
        'checkpoint_every': 100,
        'segments': {
            'pite': {'step': 0.0025, 'svd_atol': 1e-7, 'samples_per_step': 2000,
                     'pite': {'n_samples': 2000, 'infidelity_threshold': 1e-4}},
            'sr': {'step': 0.0005, 'svd_atol': 1e-7, 'samples_per_step': 8000},
            'tvmc': {'step': 0.001, 'svd_atol': 1e-8, 'samples_per_step': 62500},
        },
    },
    'paper': {
        'sampler': {'n_chains': 128, 'sweep_factor': 10, 'burn_in': 100},
        'pite_until': 0.1,
        'checkpoint_every': 100,
        'segments': {
            'pite': {'step': 0.0025, 'svd_atol': 1e-7, 'samples_per_step': 16000,
                     'pite': {'n_samples': 16000, 'infidelity_threshold': 1e-6}},
            'sr': {'step': 0.0005, 'svd_atol': 1e-7, 'samples_per_step': 64000},
            'tvmc': {'step': 0.001, 'svd_atol': 1e-8, 'samples_per_step': 500000},
        },
    },
}

PRESET_ALIASES = {'full': 'paper'}


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


@dataclass(frozen=True)
class LatticeSpec:
    kind: str
    extent: Union[int, Tuple[int, ...]]
    boundary: str = 'periodic'

    def build(self) -> Lattice:
        return build_lattice(self.kind, self.extent, self.boundary)


@dataclass(frozen=True)
class ModelSpec:
    J: float = 1.0
    h_T: float = 0.0
    h_L: float = 0.0

    def hamiltonian(self, lattice: Lattice) -> PauliOperator:
        return build_tfim(lattice, self.J, self.h_T, self.h_L)


@dataclass(frozen=True)
class AnsatzSpec:
    architecture: Architecture
    alpha: int = 1
    hidden_size: int = 8
    sigma_init: float = 0.01
    mean_field: bool = False

    @property
    def default_integrator(self) -> Integrator:
        return Integrator.RK2 if self.architecture == Architecture.RBMO else Integrator.RK4

    def build(self, n_sites: int, rng: np.random.Generator) -> VariationalState:
        """Identity-initialized state."""
        if self.architecture == Architecture.RBMO:
            state = RbmoState.identity(n_sites, self.alpha)
        elif self.architecture == Architecture.ARNNO_X:
            state = ArnnoXState.identity(n_sites, self.hidden_size, self.sigma_init, rng)
        elif self.architecture == Architecture.ARNNO_Z:
            state = ArnnoZState.identity(n_sites, self.hidden_size, self.sigma_init, rng)
        else:
            raise SchemaError(f'cannot initialize {self.architecture.value} directly')
        return wrap_mean_field(state) if self.mean_field else state

    @property
    def descriptor_architecture(self) -> Architecture:
        return Architecture.MEAN_FIELD if self.mean_field else self.architecture


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeSpec
    model: ModelSpec
    ansatz: AnsatzSpec
    pite: EvolutionConfig
    sr: EvolutionConfig
    tvmc: EvolutionConfig
    beta_target: float
    quench: Optional[ModelSpec] = None
    t_target: float = 0.0
    pite_until: float = 0.1
    checkpoint_betas: Tuple[float, ...] = ()
    checkpoint_every: int = 100
    record_every: int = 1
    pair_mode: Reduction = Reduction.BOND_AVERAGE
    metts_samples: int = 10000
    metts_chains: int = 1
    metts_discard: int = 100
    output_dir: str = ''
    seed: int = 0
    preset: str = 'desk'

    def __post_init__(self):
        if self.beta_target < 0:
            raise SchemaError('beta_target must be non-negative')
        if self.t_target > 0 and self.quench is None:
            raise SchemaError('a quench model is required when t_target > 0')

    @classmethod
    def from_validated(cls, data: Dict[str, Any]) -> 'RunConfig':
        ansatz = AnsatzSpec(
            architecture=Architecture(data['ansatz']['architecture']),
            alpha=data['ansatz'].get('alpha', 1),
            hidden_size=data['ansatz'].get('hidden_size', 8),
            sigma_init=data['ansatz'].get('sigma_init', 0.01),
            mean_field=data['ansatz'].get('mean_field', False),
        )
        top_sampler = dict(data.get('sampler') or {})

        def segment(name: str) -> EvolutionConfig:
            seg = dict(data['segments'][name])
            sampler = SamplerSettings(**{**top_sampler, **dict(seg.pop('sampler', None) or {})})
            pite = PiteSettings(**dict(seg.pop('pite', None) or {}))
            seg.setdefault('integrator', ansatz.default_integrator)
            seg.setdefault('backend', data.get('backend', 'sampled'))
            return EvolutionConfig(sampler=sampler, pite=pite, **seg)

        quench = data.get('quench')
        metts = dict(data.get('metts') or {})
        return cls(
            lattice=LatticeSpec(**data['lattice']),
            model=ModelSpec(**data['model']),
            ansatz=ansatz,
            pite=segment('pite'),
            sr=segment('sr'),
            tvmc=segment('tvmc'),
            beta_target=data['beta_target'],
            quench=ModelSpec(**quench) if quench else None,
            t_target=data.get('t_target', 0.0),
            pite_until=data.get('pite_until', 0.1),
            checkpoint_betas=tuple(sorted(data.get('checkpoint_betas') or ())),
            checkpoint_every=data.get('checkpoint_every', 100),
            record_every=data.get('record_every', 1),
            pair_mode=Reduction((data.get('observables') or {}).get('pair_mode', Reduction.BOND_AVERAGE)),
            metts_samples=metts.get('n_samples', 10000),
            metts_chains=metts.get('n_chains', 1),
            metts_discard=metts.get('discard', 100),
            output_dir=data.get('output_dir') or '',
            seed=data.get('seed', 0),
            preset=data['preset'],
        )

    @property
    def skips_pite(self) -> bool:
        """The rotated auxiliary basis starts SR at beta = 0."""
        return self.ansatz.architecture == Architecture.ARNNO_X

    def to_dict(self) -> Dict[str, Any]:
        return {
            'preset': self.preset,
            'seed': self.seed,
            'output_dir': self.output_dir,
            'lattice': {
                'kind': self.lattice.kind,
                'extent': list(self.lattice.extent) if isinstance(self.lattice.extent, tuple) else self.lattice.extent,
                'boundary': self.lattice.boundary,
            },
            'model': asdict(self.model),
            'quench': asdict(self.quench) if self.quench else None,
            'ansatz': {**asdict(self.ansatz), 'architecture': self.ansatz.architecture.value},
            'segments': {
                'pite': self.pite.to_dict(),
                'sr': self.sr.to_dict(),
                'tvmc': self.tvmc.to_dict(),
            },
            'beta_target': self.beta_target,
            't_target': self.t_target,
            'pite_until': self.pite_until,
            'checkpoint_betas': list(self.checkpoint_betas),
            'checkpoint_every': self.checkpoint_every,
            'record_every': self.record_every,
            'observables': {'pair_mode': self.pair_mode.value},
            'metts': {'n_samples': self.metts_samples, 'n_chains': self.metts_chains, 'discard': self.metts_discard},
        }


def load_run_config(source: Union[str, Path, Mapping[str, Any]], preset: Optional[str] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Read a JSON run configuration and merge it over its preset.

    `preset` (e.g. from --preset) wins over the file's own preset key;
    `overrides` (seed, output_dir from the command line) win over both.
    """
    if isinstance(source, Mapping):
        data = dict(source)
    else:
        try:
            with open(source) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SchemaError(f'cannot read run config {source}: {e}') from e

    preset_name = preset or data.get('preset') or settings.NTFS_DEFAULT_PRESET
    preset_name = PRESET_ALIASES.get(preset_name, preset_name)
    if preset_name not in PRESETS:
        raise SchemaError(f'unknown preset {preset_name!r}; choose from {sorted(PRESETS)}')
    base = deep_merge(PRESETS[preset_name], {'sampler': {'workers': settings.NTFS_WORKERS}})
    merged = deep_merge(base, data)
    merged = deep_merge(merged, {k: v for k, v in (overrides or {}).items() if v is not None})
    merged['preset'] = preset_name

    serializer = RunConfigSerializer(data=merged)
    if not serializer.is_valid():
        raise SchemaError('invalid run config', {'errors': serializer.errors})
    config = RunConfig.from_validated(serializer.validated_data)
    logger.debug('Loaded run config (preset %s, seed %d)', preset_name, config.seed)
    return config
