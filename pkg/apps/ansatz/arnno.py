"""
ARNNO - autoregressive recurrent network operator.

Each site i carries a local index k = 2 * b(sigma_i) + b(aux_i) with b(+1) = 0,
b(-1) = 1. An LSTM cell scans the sites in row-major order, fed with the
one-hot of the previous local index, and two heads produce per-site
conditionals

    ln p = logsoftmax(W_amp h + b_amp),   phi = pi (W_ph h + b_ph)
    psi = prod_i sqrt(p_i(k_i)) exp(i phi_i(k_i))

ARNNO_X works in the Hadamard-rotated auxiliary basis. ARNNO_Z stays in the
Z basis and masks every conditional with the pair factor (1, mu, mu, 1),
renormalized per site, so mu = 0 pins the state to the identity support.

Parameters are real; the output is complex.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple
import logging
import math

import numpy as np
import torch
from torch import nn
from torch.func import functional_call, jacrev

from apps.thermofield.algebra import AuxBasis, configs_from_local, local_indices
from ntfsim.exceptions import ContractViolation

from .base import Architecture, VariationalState
from .registry import AnsatzRegistry

logger = logging.getLogger(__name__)

LOCAL_DIM = 4
DEFAULT_HIDDEN_SIZE = 8
DEFAULT_SIGMA_INIT = 0.01
# configurations per autograd call
JACOBIAN_CHUNK = 2048


class ArnnoNetwork(nn.Module):
    def __init__(self, hidden_size: int):
        super().__init__()
        self.hidden_size = hidden_size
        self.cell = nn.LSTMCell(LOCAL_DIM, hidden_size, dtype=torch.float64)
        self.amp_head = nn.Linear(hidden_size, LOCAL_DIM, dtype=torch.float64)
        self.phase_head = nn.Linear(hidden_size, LOCAL_DIM, dtype=torch.float64)

    def initial_carry(self, batch: int):
        zeros = torch.zeros(batch, self.hidden_size, dtype=torch.float64)
        return zeros, zeros.clone(), torch.zeros(batch, LOCAL_DIM, dtype=torch.float64)

    def step(self, carry):
        h, c, inputs = carry
        h, c = self.cell(inputs, (h, c))
        return h, c, self.amp_head(h), math.pi * self.phase_head(h)

    def forward(self, local: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Per-site amplitude logits and phases, each (B, N, 4)."""
        batch, n_sites = local.shape
        h, c, inputs = self.initial_carry(batch)
        logits, phases = [], []
        for i in range(n_sites):
            h, c, amp, phase = self.step((h, c, inputs))
            logits.append(amp)
            phases.append(phase)
            inputs = nn.functional.one_hot(local[:, i], LOCAL_DIM).to(torch.float64)
        return torch.stack(logits, dim=1), torch.stack(phases, dim=1)


def _parameter_shapes(hidden_size: int) -> List[Tuple[str, Tuple[int, ...]]]:
    h = hidden_size
    return [
        ('cell.weight_ih', (4 * h, LOCAL_DIM)),
        ('cell.weight_hh', (4 * h, h)),
        ('cell.bias_ih', (4 * h,)),
        ('cell.bias_hh', (4 * h,)),
        ('amp_head.weight', (LOCAL_DIM, h)),
        ('amp_head.bias', (LOCAL_DIM,)),
        ('phase_head.weight', (LOCAL_DIM, h)),
        ('phase_head.bias', (LOCAL_DIM,)),
    ]


def network_size(hidden_size: int) -> int:
    return sum(int(np.prod(shape)) for _, shape in _parameter_shapes(hidden_size))


@dataclass
class ArnnoParams:
    hidden_size: int
    weights: Dict[str, np.ndarray]
    mu: Optional[float] = None

    @property
    def W_amp(self) -> np.ndarray:
        return self.weights['amp_head.weight']

    @property
    def b_amp(self) -> np.ndarray:
        return self.weights['amp_head.bias']

    @property
    def W_ph(self) -> np.ndarray:
        return self.weights['phase_head.weight']

    @property
    def b_ph(self) -> np.ndarray:
        return self.weights['phase_head.bias']

    def flatten(self) -> np.ndarray:
        blocks = [np.asarray(self.weights[name], dtype=np.float64).ravel()
                  for name, _ in _parameter_shapes(self.hidden_size)]
        if self.mu is not None:
            blocks.append(np.array([self.mu], dtype=np.float64))
        return np.concatenate(blocks)

    @classmethod
    def unflatten(cls, theta: np.ndarray, hidden_size: int, mean_field: bool) -> 'ArnnoParams':
        weights, offset = {}, 0
        for name, shape in _parameter_shapes(hidden_size):
            size = int(np.prod(shape))
            weights[name] = np.asarray(theta[offset:offset + size], dtype=np.float64).reshape(shape)
            offset += size
        mu = float(theta[offset]) if mean_field else None
        return cls(hidden_size=hidden_size, weights=weights, mu=mu)


def init_arnno_identity(
    n_sites: int,
    hidden_size: int = DEFAULT_HIDDEN_SIZE,
    sigma_init: float = DEFAULT_SIGMA_INIT,
    rng: Optional[np.random.Generator] = None,
    basis: AuxBasis = AuxBasis.X,
) -> ArnnoParams:
    """
    Zero heads, b_amp = x (1,1,1,1) and b_ph = (y,y,y,y-1) in the X basis,
    (y,y,y,y) with mu = 0 in the Z basis; x, y ~ N(0, sigma_init).

    The recurrent cell gets the usual uniform(-1/sqrt(h), 1/sqrt(h)) draw; it
    does not reach the output while the heads are zero.
    """
    rng = rng or np.random.default_rng()
    basis = AuxBasis(basis)
    bound = 1.0 / math.sqrt(hidden_size)
    weights = {}
    for name, shape in _parameter_shapes(hidden_size):
        if name.startswith('cell.'):
            weights[name] = rng.uniform(-bound, bound, size=shape)
        else:
            weights[name] = np.zeros(shape)
    x, y = rng.normal(0.0, sigma_init, size=2)
    weights['amp_head.bias'] = np.full(LOCAL_DIM, x)
    phase_bias = np.full(LOCAL_DIM, y)
    if basis == AuxBasis.X:
        phase_bias[3] -= 1.0
    weights['phase_head.bias'] = phase_bias
    return ArnnoParams(
        hidden_size=hidden_size,
        weights=weights,
        mu=0.0 if basis == AuxBasis.Z else None,
    )


class ArnnoState(VariationalState):
    holomorphic = False
    normalized = True
    mean_field = False

    def __init__(self, n_sites: int, hidden_size: int, parameters: np.ndarray):
        self.hidden_size = int(hidden_size)
        super().__init__(n_sites, parameters)
        self.network = ArnnoNetwork(self.hidden_size)
        self._theta = torch.as_tensor(np.array(self.parameters), dtype=torch.float64)

    @classmethod
    def from_params(cls, n_sites: int, params: ArnnoParams) -> 'ArnnoState':
        return cls(n_sites, params.hidden_size, params.flatten())

    @classmethod
    def identity(cls, n_sites: int, hidden_size: int = DEFAULT_HIDDEN_SIZE,
                 sigma_init: float = DEFAULT_SIGMA_INIT,
                 rng: Optional[np.random.Generator] = None) -> 'ArnnoState':
        params = init_arnno_identity(n_sites, hidden_size, sigma_init, rng, cls._basis)
        return cls.from_params(n_sites, params)

    @classmethod
    def from_descriptor(cls, descriptor: Dict[str, Any], parameters: np.ndarray) -> 'ArnnoState':
        return cls(descriptor['n_sites'], descriptor['hyperparameters']['hidden_size'], parameters)

    @property
    def basis(self) -> AuxBasis:
        return self._basis

    @property
    def params(self) -> ArnnoParams:
        return ArnnoParams.unflatten(self.parameters, self.hidden_size, self.mean_field)

    def expected_size(self) -> int:
        return network_size(self.hidden_size) + (1 if self.mean_field else 0)

    def hyperparameters(self) -> Dict[str, Any]:
        return {'hidden_size': self.hidden_size, 'layers': 1}

    def with_parameters(self, parameters: np.ndarray) -> 'ArnnoState':
        return self.__class__(self.n_sites, self.hidden_size, parameters)

    # functional core

    def _split_theta(self, theta: torch.Tensor):
        params, offset = {}, 0
        for name, shape in _parameter_shapes(self.hidden_size):
            size = int(np.prod(shape))
            params[name] = theta[offset:offset + size].reshape(shape)
            offset += size
        mu = theta[offset] if self.mean_field else None
        return params, mu

    def _mask(self, mu: Optional[torch.Tensor]) -> Optional[torch.Tensor]:
        if mu is None:
            return None
        one = torch.ones((), dtype=torch.float64)
        return torch.stack([one, mu, mu, one])

    def _site_terms(self, theta: torch.Tensor, local: torch.Tensor):
        """
        Per-site selected terms, each (B, N):
        log sqrt(p) without the mask factor, the mask factor m(k) (or None), phase.
        """
        params, mu = self._split_theta(theta)
        logits, phases = functional_call(self.network, params, (local,))
        log_p = torch.log_softmax(logits, dim=-1)
        index = local.unsqueeze(-1)
        half_log_p = 0.5 * log_p.gather(-1, index).squeeze(-1)
        phase = phases.gather(-1, index).squeeze(-1)
        mask = self._mask(mu)
        if mask is None:
            return half_log_p, None, phase
        log_norm = torch.log((log_p.exp() * mask ** 2).sum(dim=-1))
        return half_log_p - 0.5 * log_norm, mask[local], phase

    def _log_parts(self, theta: torch.Tensor, local: torch.Tensor) -> torch.Tensor:
        half_log_p, mask_sel, phase = self._site_terms(theta, local)
        real = half_log_p.sum(dim=1)
        imag = phase.sum(dim=1)
        if mask_sel is not None:
            real = real + torch.log(torch.abs(mask_sel)).sum(dim=1)
            # each negative mask entry carries a phase of pi
            imag = imag + math.pi * (mask_sel < 0).sum(dim=1).to(imag.dtype)
        return torch.stack([real, imag])

    def _local(self, configs: np.ndarray) -> torch.Tensor:
        return torch.as_tensor(local_indices(configs))

    def _log_amplitude(self, configs: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            parts = self._log_parts(self._theta, self._local(configs)).numpy()
        return parts[0] + 1j * parts[1]

    def _log_derivatives(self, configs: np.ndarray) -> np.ndarray:
        blocks = []
        for start in range(0, configs.shape[0], JACOBIAN_CHUNK):
            local = self._local(configs[start:start + JACOBIAN_CHUNK])
            jac = jacrev(lambda t: self._log_parts(t, local))(self._theta).detach().numpy()
            blocks.append(jac[0] + 1j * jac[1])
        return np.concatenate(blocks, axis=0)

    def _amplitude_parts(self, theta: torch.Tensor, local: torch.Tensor, log_scale: float) -> torch.Tensor:
        half_log_p, mask_sel, phase = self._site_terms(theta, local)
        modulus = torch.exp(half_log_p.sum(dim=1) - log_scale)
        if mask_sel is not None:
            modulus = modulus * torch.prod(mask_sel, dim=1)
        total_phase = phase.sum(dim=1)
        return torch.stack([modulus * torch.cos(total_phase), modulus * torch.sin(total_phase)])

    def _amplitude_derivatives(self, configs: np.ndarray, log_scale: float) -> Tuple[np.ndarray, np.ndarray]:
        psi_blocks, d_blocks = [], []
        for start in range(0, configs.shape[0], JACOBIAN_CHUNK):
            local = self._local(configs[start:start + JACOBIAN_CHUNK])
            fn = lambda t: self._amplitude_parts(t, local, log_scale)  # noqa: E731
            with torch.no_grad():
                parts = fn(self._theta).numpy()
            jac = jacrev(fn)(self._theta).detach().numpy()
            psi_blocks.append(parts[0] + 1j * parts[1])
            d_blocks.append(jac[0] + 1j * jac[1])
        return np.concatenate(psi_blocks), np.concatenate(d_blocks, axis=0)

    # autoregressive access

    def _masked_conditionals(self, amp_logits: torch.Tensor, phases: torch.Tensor):
        probs = torch.softmax(amp_logits, dim=-1)
        if self.mean_field:
            _, mu = self._split_theta(self._theta)
            probs = probs * self._mask(mu) ** 2
            probs = probs / probs.sum(dim=-1, keepdim=True)
        return probs, phases

    def conditionals(self, prefix) -> Tuple[np.ndarray, np.ndarray]:
        """Distribution over the 4 local outcomes of site len(prefix), and their phases."""
        prefix = [int(k) for k in prefix]
        if len(prefix) >= self.n_sites or any(not 0 <= k < LOCAL_DIM for k in prefix):
            raise ContractViolation(f'invalid prefix {prefix} for {self.n_sites} sites')
        params, _ = self._split_theta(self._theta)
        with torch.no_grad():
            network = self._bound_network(params)
            h, c, inputs = network.initial_carry(1)
            for k in prefix:
                h, c, _, _ = network.step((h, c, inputs))
                inputs = nn.functional.one_hot(torch.tensor([k]), LOCAL_DIM).to(torch.float64)
            _, _, amp, phase = network.step((h, c, inputs))
            probs, phases = self._masked_conditionals(amp, phase)
        return probs[0].numpy(), phases[0].numpy()

    def _bound_network(self, params: Dict[str, torch.Tensor]) -> ArnnoNetwork:
        self.network.load_state_dict(params)
        return self.network

    def ancestral_sample(self, n_samples: int, rng: np.random.Generator) -> np.ndarray:
        """Independent draws from |psi|^2, site by site; returns (n, 2N) configurations."""
        params, _ = self._split_theta(self._theta)
        local = np.empty((n_samples, self.n_sites), dtype=np.int64)
        with torch.no_grad():
            network = self._bound_network(params)
            h, c, inputs = network.initial_carry(n_samples)
            for i in range(self.n_sites):
                h, c, amp, phase = network.step((h, c, inputs))
                probs, _ = self._masked_conditionals(amp, phase)
                cumulative = np.cumsum(probs.numpy(), axis=1)
                draws = rng.random(n_samples)[:, None]
                local[:, i] = np.minimum((cumulative < draws).sum(axis=1), LOCAL_DIM - 1)
                inputs = nn.functional.one_hot(torch.as_tensor(local[:, i]), LOCAL_DIM).to(torch.float64)
        return configs_from_local(local)


@AnsatzRegistry.register(Architecture.ARNNO_X)
class ArnnoXState(ArnnoState):
    architecture = Architecture.ARNNO_X
    _basis = AuxBasis.X
    mean_field = False


@AnsatzRegistry.register(Architecture.ARNNO_Z)
class ArnnoZState(ArnnoState):
    architecture = Architecture.ARNNO_Z
    _basis = AuxBasis.Z
    mean_field = True

    @property
    def mu(self) -> float:
        return float(self.parameters[-1])
