"""
METTS - minimally entangled typical thermal states.

Each step evolves a product state to tau = beta / 2 under the normalized
imaginary-time flow, measures, and collapses in the other basis (Z and X
alternate).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence
import logging

import numpy as np
from scipy.integrate import solve_ivp

from apps.lattice.pauli import PauliOperator, to_sparse
from apps.observables.estimators import ObservableSpec
from ntfsim.exceptions import CapacityError, ContractViolation, OracleError

from .exact import dense_hamiltonian, vector_cap

logger = logging.getLogger(__name__)

DEFAULT_DISCARD = 100
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def hadamard_all(vector: np.ndarray, n_sites: int) -> np.ndarray:
    tensor = vector.reshape((2,) * n_sites)
    for axis in range(n_sites):
        tensor = np.moveaxis(np.tensordot(_HADAMARD, tensor, axes=([1], [axis])), 0, axis)
    return tensor.reshape(-1)


def product_state(bits: np.ndarray, basis: str) -> np.ndarray:
    """Basis vector for bits (0 = up / plus), rotated to X when basis == 'X'."""
    n = bits.size
    vector = np.zeros(2 ** n, dtype=np.complex128)
    vector[int(bits @ (1 << np.arange(n - 1, -1, -1)))] = 1.0
    return hadamard_all(vector, n) if basis == 'X' else vector


@dataclass
class MettsChain:
    seed: np.ndarray
    collapse_basis: str = 'Z'
    samples: List[Dict[str, float]] = field(default_factory=list)
    max_norm_deviation: float = 0.0

    def toggle(self):
        self.collapse_basis = 'X' if self.collapse_basis == 'Z' else 'Z'


@dataclass
class MettsResult:
    values: Dict[str, np.ndarray]
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(next(iter(self.values.values()))) if self.values else 0

    def mean(self, name: str) -> float:
        return float(np.mean(self.values[name]))

    def stderr(self, name: str) -> float:
        values = self.values[name]
        return float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'observables': {name: {'mean': self.mean(name), 'stderr': self.stderr(name)} for name in self.values},
            'n_samples': self.n_samples,
            **self.diagnostics,
        }


def imaginary_time_evolve(h: np.ndarray, vector: np.ndarray, tau: float,
                          rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL):
    """d phi / d tau = -(H - E_tau) phi; returns (phi, max norm deviation)."""
    if tau == 0:
        return vector, 0.0

    def flow(_, phi):
        h_phi = h @ phi
        return -(h_phi - np.vdot(phi, h_phi).real * phi)

    solution = solve_ivp(flow, (0.0, tau), vector, method='DOP853', rtol=rtol, atol=atol)
    if not solution.success:
        raise OracleError(f'imaginary-time integration failed: {solution.message}', {'tau': tau})
    norms = np.linalg.norm(solution.y, axis=0)
    phi = solution.y[:, -1]
    return phi / np.linalg.norm(phi), float(np.abs(norms - 1.0).max())


def _run_chain(h: np.ndarray, tau: float, matrices: Dict[str, Any], n_sites: int, n_samples: int,
               discard: int, rng: np.random.Generator, rtol: float) -> MettsChain:
    chain = MettsChain(seed=np.zeros(n_sites, dtype=np.int64))
    for step in range(discard + n_samples):
        phi, deviation = imaginary_time_evolve(h, product_state(chain.seed, chain.collapse_basis), tau, rtol=rtol)
        chain.max_norm_deviation = max(chain.max_norm_deviation, deviation)
        if step >= discard:
            chain.samples.append({
                name: float(np.vdot(phi, matrix @ phi).real) for name, matrix in matrices.items()
            })
        chain.toggle()
        amplitudes = hadamard_all(phi, n_sites) if chain.collapse_basis == 'X' else phi
        probabilities = np.abs(amplitudes) ** 2
        index = rng.choice(probabilities.size, p=probabilities / probabilities.sum())
        chain.seed = (index >> np.arange(n_sites - 1, -1, -1)) & 1
    return chain


def metts_run(hamiltonian: PauliOperator, beta: float, specs: Sequence[ObservableSpec], n_samples: int,
              rng: np.random.Generator, n_chains: int = 1, workers: int = 1,
              discard: int = DEFAULT_DISCARD, rtol: float = DEFAULT_RTOL) -> MettsResult:
    """
    Raw per-sample observable values from n_chains independent chains, n_samples in total.

    Every chain starts from the all-up Z product state and drops its first
    `discard` samples.
    """
    if beta < 0:
        raise ContractViolation(f'beta must be non-negative, got {beta}')
    if n_samples < n_chains or n_chains < 1:
        raise ContractViolation('need n_samples >= n_chains >= 1')
    n = hamiltonian.n_sites
    if n > vector_cap():
        raise CapacityError(f'{n} sites exceed the METTS cap of {vector_cap()}')
    h = dense_hamiltonian(hamiltonian)
    matrices = {spec.name: to_sparse(spec.operator) for spec in specs}
    # the first n_samples % n_chains chains take one extra sample
    per_chain = [n_samples // n_chains + (1 if k < n_samples % n_chains else 0) for k in range(n_chains)]
    child_rngs = [np.random.default_rng(s) for s in rng.integers(0, 2 ** 63 - 1, size=n_chains)]

    def run(k: int) -> MettsChain:
        return _run_chain(h, 0.5 * beta, matrices, n, per_chain[k], discard, child_rngs[k], rtol)

    if workers > 1 and n_chains > 1:
        with ThreadPoolExecutor(max_workers=min(workers, n_chains)) as pool:
            chains = list(pool.map(run, range(n_chains)))
    else:
        chains = [run(k) for k in range(n_chains)]

    values = {
        name: np.array([sample[name] for chain in chains for sample in chain.samples])
        for name in matrices
    }
    logger.info('METTS: %d samples over %d chains at beta=%.3f', n_samples, n_chains, beta)
    return MettsResult(values=values, diagnostics={
        'n_chains': n_chains,
        'discard': discard,
        'max_norm_deviation': max(chain.max_norm_deviation for chain in chains),
    })
