"""
RBMO - restricted Boltzmann machine operator on doubled configurations.

    ln psi(sigma, s) = sum_i (a_i sigma_i + a'_i s_i) + sum_m ln cosh(theta_m)
    theta_m = b_m + sum_j W_mj sigma_j + sum_j W'_mj s_j

All parameters are complex and psi is holomorphic in them.
"""
from dataclasses import dataclass
from typing import Any, Dict, Tuple
import logging

import numpy as np

from apps.thermofield.algebra import AuxBasis
from ntfsim.exceptions import ContractViolation

from .base import Architecture, VariationalState, exp_scaled
from .registry import AnsatzRegistry

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)
# |Re z| above which ln cosh switches to the asymptotic form
LOG_COSH_BRANCH = 12.0
# cosh values this small are exact zeros of the identity pairing (cos(pi/2) ~ 6e-17)
ZERO_TOLERANCE = 1e-14


def log_cosh(z: np.ndarray) -> np.ndarray:
    """Overflow-safe complex ln cosh; exact zeros of cosh give -inf."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty_like(z)
    large = np.abs(z.real) > LOG_COSH_BRANCH
    if np.any(large):
        zl = z[large] * np.sign(z.real[large])
        out[large] = zl + np.log1p(np.exp(-2.0 * zl)) - LN2
    small = ~large
    if np.any(small):
        c = np.cosh(z[small])
        with np.errstate(divide='ignore'):
            values = np.log(c)
        values[np.abs(c) < ZERO_TOLERANCE] = complex(-np.inf, 0.0)
        out[small] = values
    return out


@dataclass
class RbmoParams:
    a: np.ndarray       # (N,)
    a_aux: np.ndarray   # (N,)
    b: np.ndarray       # (M,)
    W: np.ndarray       # (M, N)
    W_aux: np.ndarray   # (M, N)

    @property
    def n_sites(self) -> int:
        return self.a.size

    @property
    def n_hidden(self) -> int:
        return self.b.size

    def flatten(self) -> np.ndarray:
        return np.concatenate([
            self.a, self.a_aux, self.b, self.W.ravel(), self.W_aux.ravel(),
        ]).astype(np.complex128)

    @classmethod
    def unflatten(cls, theta: np.ndarray, n_sites: int, n_hidden: int) -> 'RbmoParams':
        n, m = n_sites, n_hidden
        theta = np.asarray(theta, dtype=np.complex128)
        offsets = np.cumsum([0, n, n, m, m * n, m * n])
        a, a_aux, b, w, w_aux = (theta[offsets[k]:offsets[k + 1]] for k in range(5))
        return cls(a=a, a_aux=a_aux, b=b, W=w.reshape(m, n), W_aux=w_aux.reshape(m, n))


def init_rbmo_identity(n_sites: int, alpha: int = 1) -> RbmoParams:
    """W_ii = -W'_ii = i pi / 4, everything else zero."""
    if alpha < 1 or int(alpha) != alpha:
        raise ContractViolation(f'alpha must be a positive integer, got {alpha}')
    n, m = n_sites, int(alpha) * n_sites
    w = np.zeros((m, n), dtype=np.complex128)
    w[np.arange(n), np.arange(n)] = 1j * np.pi / 4
    return RbmoParams(
        a=np.zeros(n, dtype=np.complex128),
        a_aux=np.zeros(n, dtype=np.complex128),
        b=np.zeros(m, dtype=np.complex128),
        W=w,
        W_aux=-w,
    )


def init_rbmo_factorized(g_a: np.ndarray, g_b: np.ndarray, g_W: np.ndarray) -> RbmoParams:
    """
    Block RBMO with psi(sigma, s) = g(sigma) g(s).

    g(sigma) = exp(g_a . sigma) prod_m cosh(g_b_m + g_W[m] . sigma); the first
    hidden block sees only sigma, the second only s.
    """
    g_a = np.asarray(g_a, dtype=np.complex128)
    g_b = np.asarray(g_b, dtype=np.complex128)
    g_W = np.asarray(g_W, dtype=np.complex128)
    zeros = np.zeros_like(g_W)
    return RbmoParams(
        a=g_a.copy(),
        a_aux=g_a.copy(),
        b=np.concatenate([g_b, g_b]),
        W=np.vstack([g_W, zeros]),
        W_aux=np.vstack([zeros, g_W]),
    )


@AnsatzRegistry.register(Architecture.RBMO)
class RbmoState(VariationalState):
    architecture = Architecture.RBMO
    holomorphic = True

    def __init__(self, n_sites: int, n_hidden: int, parameters: np.ndarray):
        self.n_hidden = int(n_hidden)
        super().__init__(n_sites, parameters)
        self.params = RbmoParams.unflatten(self.parameters, self.n_sites, self.n_hidden)

    @classmethod
    def from_params(cls, params: RbmoParams) -> 'RbmoState':
        return cls(params.n_sites, params.n_hidden, params.flatten())

    @classmethod
    def identity(cls, n_sites: int, alpha: int = 1) -> 'RbmoState':
        return cls.from_params(init_rbmo_identity(n_sites, alpha))

    @classmethod
    def from_descriptor(cls, descriptor: Dict[str, Any], parameters: np.ndarray) -> 'RbmoState':
        return cls(descriptor['n_sites'], descriptor['hyperparameters']['n_hidden'], parameters)

    @property
    def basis(self) -> AuxBasis:
        return AuxBasis.Z

    def expected_size(self) -> int:
        n, m = self.n_sites, self.n_hidden
        return 2 * n + m + 2 * m * n

    def hyperparameters(self) -> Dict[str, Any]:
        return {
            'n_hidden': self.n_hidden,
            'alpha': self.n_hidden / self.n_sites,
        }

    def with_parameters(self, parameters: np.ndarray) -> 'RbmoState':
        return RbmoState(self.n_sites, self.n_hidden, parameters)

    def _split(self, configs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n_sites
        return configs[:, :n].astype(np.float64), configs[:, n:].astype(np.float64)

    def _angles(self, sigma: np.ndarray, s: np.ndarray) -> np.ndarray:
        p = self.params
        return p.b[None, :] + sigma @ p.W.T + s @ p.W_aux.T

    def _log_amplitude(self, configs: np.ndarray) -> np.ndarray:
        sigma, s = self._split(configs)
        p = self.params
        linear = sigma @ p.a + s @ p.a_aux
        return linear + log_cosh(self._angles(sigma, s)).sum(axis=1)

    def _log_derivatives(self, configs: np.ndarray) -> np.ndarray:
        sigma, s = self._split(configs)
        t = np.tanh(self._angles(sigma, s))
        batch = configs.shape[0]
        return np.concatenate([
            sigma.astype(np.complex128),
            s.astype(np.complex128),
            t,
            (t[:, :, None] * sigma[:, None, :]).reshape(batch, -1),
            (t[:, :, None] * s[:, None, :]).reshape(batch, -1),
        ], axis=1)

    def _amplitude_derivatives(self, configs: np.ndarray, log_scale: float) -> Tuple[np.ndarray, np.ndarray]:
        sigma, s = self._split(configs)
        p = self.params
        theta = self._angles(sigma, s)
        shift = np.abs(theta.real)
        plus, minus = np.exp(theta - shift), np.exp(-theta - shift)
        # cosh and sinh divided by exp(|Re theta|)
        u = 0.5 * (plus + minus)
        v = 0.5 * (plus - minus)
        u[(np.abs(u) * np.exp(shift)) < ZERO_TOLERANCE] = 0.0

        linear = sigma @ p.a + s @ p.a_aux
        prefactor = exp_scaled(linear + shift.sum(axis=1), log_scale)
        batch, m = u.shape
        ones = np.ones((batch, 1), dtype=np.complex128)
        before = np.cumprod(np.hstack([ones, u[:, :-1]]), axis=1)
        after = np.cumprod(np.hstack([ones, u[:, :0:-1]]), axis=1)[:, ::-1]
        excluded = before * after

        psi = prefactor * np.prod(u, axis=1)
        d_hidden = prefactor[:, None] * v * excluded
        d_psi = np.concatenate([
            psi[:, None] * sigma,
            psi[:, None] * s,
            d_hidden,
            (d_hidden[:, :, None] * sigma[:, None, :]).reshape(batch, -1),
            (d_hidden[:, :, None] * s[:, None, :]).reshape(batch, -1),
        ], axis=1)
        return psi, d_psi
