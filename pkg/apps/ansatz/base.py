"""
Base Variational State - contract shared by every ansatz
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union
import logging

import numpy as np

from apps.thermofield.algebra import AuxBasis, DoubledConfiguration
from ntfsim.exceptions import BasisMismatchError, ContractViolation, DomainError

logger = logging.getLogger(__name__)

ConfigInput = Union[DoubledConfiguration, np.ndarray]


class Architecture(str, Enum):
    RBMO = 'rbmo'
    ARNNO_Z = 'arnno_z'
    ARNNO_X = 'arnno_x'
    MEAN_FIELD = 'mean_field_wrapped'


class VariationalState(ABC):
    """
    Immutable architecture + parameter vector.

    Batched methods take int8 arrays of shape (B, 2N) in the state's basis;
    the single-configuration form takes a DoubledConfiguration and checks
    its basis tag. Exact zeros of psi show up as log-amplitudes with a -inf
    real part.
    """

    architecture: Architecture
    holomorphic: bool = True
    normalized: bool = False

    def __init__(self, n_sites: int, parameters: np.ndarray):
        if n_sites < 1:
            raise ContractViolation('a state needs at least one site')
        self.n_sites = int(n_sites)
        dtype = np.complex128 if self.holomorphic else np.float64
        if not self.holomorphic and np.iscomplexobj(parameters) and np.any(np.imag(parameters)):
            raise ContractViolation(f'{self.architecture.value} takes real parameters')
        theta = np.array(np.real(parameters) if not self.holomorphic else parameters, dtype=dtype).ravel()
        if theta.size != self.expected_size():
            raise ContractViolation(
                f'{self.architecture.value} expects {self.expected_size()} parameters, got {theta.size}'
            )
        if not np.all(np.isfinite(theta)):
            raise ContractViolation('parameters must be finite')
        theta.setflags(write=False)
        self._parameters = theta

    @property
    def parameters(self) -> np.ndarray:
        return self._parameters

    @property
    def n_parameters(self) -> int:
        return self._parameters.size

    @property
    @abstractmethod
    def basis(self) -> AuxBasis:
        pass

    @abstractmethod
    def expected_size(self) -> int:
        pass

    @abstractmethod
    def hyperparameters(self) -> Dict[str, Any]:
        pass

    @abstractmethod
    def with_parameters(self, parameters: np.ndarray) -> 'VariationalState':
        pass

    @abstractmethod
    def _log_amplitude(self, configs: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _log_derivatives(self, configs: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _amplitude_derivatives(self, configs: np.ndarray, log_scale: float) -> Tuple[np.ndarray, np.ndarray]:
        pass

    def _as_batch(self, configs: ConfigInput) -> Tuple[np.ndarray, bool]:
        if isinstance(configs, DoubledConfiguration):
            if configs.basis != self.basis:
                raise BasisMismatchError(
                    f'{self.architecture.value} lives in {self.basis.value}, '
                    f'configuration is tagged {configs.basis.value}'
                )
            array, single = configs.as_array()[None, :], True
        else:
            array = np.asarray(configs, dtype=np.int8)
            single = array.ndim == 1
            array = np.atleast_2d(array)
        if array.shape[1] != 2 * self.n_sites:
            raise ContractViolation(
                f'expected doubled configurations of length {2 * self.n_sites}, got {array.shape[1]}'
            )
        return array, single

    def log_amplitude(self, configs: ConfigInput):
        array, single = self._as_batch(configs)
        values = self._log_amplitude(array)
        return complex(values[0]) if single else values

    def log_derivatives(self, configs: ConfigInput) -> np.ndarray:
        """O_k = d ln psi / d theta_k, shape (B, P); (P,) for a single configuration."""
        array, single = self._as_batch(configs)
        zeros = np.isneginf(self._log_amplitude(array).real)
        if np.any(zeros):
            raise DomainError(
                f'log-derivatives requested at {int(zeros.sum())} zero-amplitude configuration(s)'
            )
        values = self._log_derivatives(array)
        return values[0] if single else values

    def amplitude_derivatives(self, configs: ConfigInput, log_scale: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        (psi, d psi / d theta) scaled by exp(-log_scale), finite at exact zeros.

        log_scale defaults to the largest finite Re ln psi of the batch.
        """
        array, _ = self._as_batch(configs)
        if log_scale is None:
            log_scale = max_finite_real(self._log_amplitude(array))
        return self._amplitude_derivatives(array, log_scale)

    def descriptor(self) -> Dict[str, Any]:
        return {
            'architecture': self.architecture.value,
            'n_sites': self.n_sites,
            'n_parameters': self.n_parameters,
            'dtype': 'complex128' if self.holomorphic else 'float64',
            'basis': self.basis.value,
            'hyperparameters': self.hyperparameters(),
        }

    def __repr__(self) -> str:
        return (f'{self.__class__.__name__}(n_sites={self.n_sites}, '
                f'n_parameters={self.n_parameters})')


def max_finite_real(log_values: np.ndarray) -> float:
    finite = np.real(log_values)[np.isfinite(np.real(log_values))]
    return float(finite.max()) if finite.size else 0.0


def exp_scaled(log_values: np.ndarray, log_scale: float) -> np.ndarray:
    """exp(log - log_scale) with -inf mapped to an exact 0."""
    out = np.zeros(log_values.shape, dtype=np.complex128)
    finite = np.isfinite(log_values.real)
    out[finite] = np.exp(log_values[finite] - log_scale)
    return out
