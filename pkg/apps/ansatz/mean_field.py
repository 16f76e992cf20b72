"""
Mean-field wrapped network: psi(sigma, s) * prod_i m_i(sigma_i, s_i).

The pair factor plays the role of sqrt(p^MF): m_i = 1 on the identity pairs
(up, up) and (down, down) and mu_i off them. With mu = 0 and a constant
network the wrapped state is exactly the identity state.
"""
from typing import Any, Dict, Optional, Tuple

import numpy as np

from apps.thermofield.algebra import AuxBasis
from ntfsim.exceptions import BasisMismatchError

from .base import Architecture, VariationalState
from .registry import AnsatzRegistry


def _exclusive_products(values: np.ndarray) -> np.ndarray:
    batch = values.shape[0]
    ones = np.ones((batch, 1), dtype=values.dtype)
    before = np.cumprod(np.hstack([ones, values[:, :-1]]), axis=1)
    after = np.cumprod(np.hstack([ones, values[:, :0:-1]]), axis=1)[:, ::-1]
    return before * after


@AnsatzRegistry.register(Architecture.MEAN_FIELD)
class MeanFieldState(VariationalState):
    architecture = Architecture.MEAN_FIELD

    def __init__(self, inner: VariationalState, mu: np.ndarray):
        if inner.basis != AuxBasis.Z:
            raise BasisMismatchError('the pair factor is defined in the auxiliary Z basis')
        self.inner = inner
        self.holomorphic = inner.holomorphic
        super().__init__(inner.n_sites, np.concatenate([inner.parameters, np.asarray(mu).ravel()]))

    @classmethod
    def from_descriptor(cls, descriptor: Dict[str, Any], parameters: np.ndarray) -> 'MeanFieldState':
        inner_descriptor = descriptor['hyperparameters']['inner']
        n_inner = int(inner_descriptor['n_parameters'])
        inner = AnsatzRegistry.build(inner_descriptor, np.asarray(parameters)[:n_inner])
        return cls(inner, np.asarray(parameters)[n_inner:])

    @property
    def basis(self) -> AuxBasis:
        return AuxBasis.Z

    @property
    def mu(self) -> np.ndarray:
        return self.parameters[self.inner.n_parameters:]

    def expected_size(self) -> int:
        return self.inner.n_parameters + self.n_sites

    def hyperparameters(self) -> Dict[str, Any]:
        return {'inner': self.inner.descriptor()}

    def with_parameters(self, parameters: np.ndarray) -> 'MeanFieldState':
        parameters = np.asarray(parameters)
        n_inner = self.inner.n_parameters
        return MeanFieldState(self.inner.with_parameters(parameters[:n_inner]), parameters[n_inner:])

    def _factors(self, configs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n_sites
        off = configs[:, :n] != configs[:, n:]
        factors = np.where(off, self.mu[None, :], 1.0).astype(np.complex128)
        return off, factors

    def _log_amplitude(self, configs: np.ndarray) -> np.ndarray:
        _, factors = self._factors(configs)
        with np.errstate(divide='ignore'):
            log_factors = np.log(factors).sum(axis=1)
        return self.inner._log_amplitude(configs) + log_factors

    def _log_derivatives(self, configs: np.ndarray) -> np.ndarray:
        off, factors = self._factors(configs)
        d_mu = np.where(off, 1.0 / np.where(off, factors, 1.0), 0.0)
        return np.concatenate([self.inner._log_derivatives(configs), d_mu], axis=1)

    def _amplitude_derivatives(self, configs: np.ndarray, log_scale: float) -> Tuple[np.ndarray, np.ndarray]:
        off, factors = self._factors(configs)
        psi_inner, d_inner = self.inner._amplitude_derivatives(configs, log_scale)
        product = np.prod(factors, axis=1)
        d_mu = psi_inner[:, None] * off * _exclusive_products(factors)
        return psi_inner * product, np.concatenate([d_inner * product[:, None], d_mu], axis=1)


def wrap_mean_field(network_state: VariationalState, mu: Optional[np.ndarray] = None) -> MeanFieldState:
    """Wrap an AuxZ network with the pair factor; mu defaults to zero (pure delta pairing)."""
    if mu is None:
        mu = np.zeros(network_state.n_sites)
    return MeanFieldState(network_state, mu)
