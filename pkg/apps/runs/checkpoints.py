"""
Checkpoints: a JSON descriptor next to a raw little-endian parameter block.

    <name>.json  layout version, ansatz descriptor, contour position, rng state
    <name>.bin   float64 or complex128 parameters, little endian
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union
import json
import logging

import numpy as np

from apps.ansatz.base import VariationalState
from apps.ansatz.registry import AnsatzRegistry
from apps.evolution.state import EvolutionState, Segment
from ntfsim.exceptions import SchemaError

logger = logging.getLogger(__name__)

LAYOUT_VERSION = 1
_DTYPES = {'complex128': '<c16', 'float64': '<f8'}


@dataclass
class Checkpoint:
    state: VariationalState
    beta: float
    t: float
    segment: Segment
    step_index: int
    rng_state: Optional[Dict[str, Any]] = None
    energy_magnitude: Optional[float] = None

    @classmethod
    def from_evolution(cls, evolution_state: EvolutionState,
                       rng: Optional[np.random.Generator] = None) -> 'Checkpoint':
        return cls(
            state=evolution_state.state,
            beta=evolution_state.beta,
            t=evolution_state.t,
            segment=evolution_state.segment,
            step_index=evolution_state.step_index,
            rng_state=rng.bit_generator.state if rng is not None else None,
            energy_magnitude=evolution_state.energy_magnitude,
        )

    def evolution_state(self) -> EvolutionState:
        return EvolutionState(
            state=self.state,
            beta=self.beta,
            t=self.t,
            segment=self.segment,
            step_index=self.step_index,
            energy_magnitude=self.energy_magnitude,
        )

    def restore_rng(self, fallback_seed: int = 0) -> np.random.Generator:
        if not self.rng_state:
            return np.random.default_rng(fallback_seed)
        bit_generator = getattr(np.random, self.rng_state['bit_generator'])()
        bit_generator.state = self.rng_state
        return np.random.Generator(bit_generator)


def _dump(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + '\n'


def write_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """Write <path>.json and <path>.bin; returns the descriptor path."""
    path = Path(path)
    if path.suffix != '.json':
        # names like beta_0.0500 carry a dot of their own
        path = path.with_name(path.name + '.json')
    path.parent.mkdir(parents=True, exist_ok=True)
    block_path = path.with_suffix('.bin')
    descriptor = checkpoint.state.descriptor()
    dtype = descriptor['dtype']
    payload = {
        'layout_version': LAYOUT_VERSION,
        'descriptor': descriptor,
        'parameters': {
            'file': block_path.name,
            'dtype': dtype,
            'byteorder': 'little',
            'count': int(checkpoint.state.n_parameters),
        },
        'position': {
            'beta': float(checkpoint.beta),
            't': float(checkpoint.t),
            'segment': Segment(checkpoint.segment).value,
            'step_index': int(checkpoint.step_index),
        },
        'energy_magnitude': checkpoint.energy_magnitude,
        'rng_state': checkpoint.rng_state,
    }
    block_path.write_bytes(np.asarray(checkpoint.state.parameters).astype(_DTYPES[dtype]).tobytes())
    path.write_text(_dump(payload))
    logger.debug('Checkpoint %s at beta=%.4f t=%.4f', path, checkpoint.beta, checkpoint.t)
    return path


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f'cannot read checkpoint {path}: {e}') from e

    version = payload.get('layout_version')
    if version != LAYOUT_VERSION:
        raise SchemaError(f'checkpoint layout version {version!r}, expected {LAYOUT_VERSION}')
    try:
        block = payload['parameters']
        dtype = _DTYPES[block['dtype']]
        if block.get('byteorder') != 'little':
            raise SchemaError('parameter blocks are little endian')
        raw = (path.parent / block['file']).read_bytes()
        parameters = np.frombuffer(raw, dtype=dtype).astype(dtype.replace('<', '='))
        if parameters.size != block['count']:
            raise SchemaError(f"parameter block holds {parameters.size} values, descriptor says {block['count']}")
        state = AnsatzRegistry.build(payload['descriptor'], parameters)
        position = payload['position']
        return Checkpoint(
            state=state,
            beta=position['beta'],
            t=position['t'],
            segment=Segment(position['segment']),
            step_index=position['step_index'],
            rng_state=payload.get('rng_state'),
            energy_magnitude=payload.get('energy_magnitude'),
        )
    except (KeyError, ValueError, OSError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f'malformed checkpoint {path}: {e}') from e
