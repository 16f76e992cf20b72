"""
Ansatz Registry - maps architecture descriptors back to state classes
"""
from typing import Any, Callable, Dict, Type
import logging

import numpy as np

from ntfsim.exceptions import SchemaError

from .base import Architecture, VariationalState

logger = logging.getLogger(__name__)


class AnsatzRegistry:
    """
    Registry of variational architectures.

    Usage:
        @AnsatzRegistry.register(Architecture.RBMO)
        class RbmoState(VariationalState):
            @classmethod
            def from_descriptor(cls, descriptor, parameters): ...
    """

    _builders: Dict[Architecture, Type[VariationalState]] = {}

    @classmethod
    def register(cls, architecture: Architecture) -> Callable:
        def decorator(state_class: Type[VariationalState]):
            cls._builders[Architecture(architecture)] = state_class
            logger.debug('Registered ansatz %s -> %s', architecture.value, state_class.__name__)
            return state_class
        return decorator

    @classmethod
    def get(cls, architecture) -> Type[VariationalState]:
        try:
            return cls._builders[Architecture(architecture)]
        except (KeyError, ValueError) as exc:
            raise SchemaError(f'unknown architecture {architecture!r}') from exc

    @classmethod
    def list_architectures(cls):
        return sorted(a.value for a in cls._builders)

    @classmethod
    def build(cls, descriptor: Dict[str, Any], parameters: np.ndarray) -> VariationalState:
        """Rebuild a state from its descriptor and flat parameter vector."""
        state_class = cls.get(descriptor.get('architecture'))
        if int(descriptor.get('n_parameters', -1)) != np.asarray(parameters).size:
            raise SchemaError(
                f"descriptor declares {descriptor.get('n_parameters')} parameters, "
                f'block holds {np.asarray(parameters).size}'
            )
        return state_class.from_descriptor(descriptor, parameters)
