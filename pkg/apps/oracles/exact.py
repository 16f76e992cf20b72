"""
Dense exact diagonalization on the physical and doubled Hilbert spaces
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence
import logging

import numpy as np
from scipy import linalg

from apps.ansatz.base import VariationalState, exp_scaled, max_finite_real
from apps.lattice.pauli import PauliOperator, to_sparse
from apps.thermofield.algebra import doubled_configurations
from ntfsim.exceptions import CapacityError, ContractViolation

logger = logging.getLogger(__name__)

DENSE_VECTOR_CAP = 12
DENSE_MATRIX_CAP = 10
PSD_TOLERANCE = 1e-10


def _cap(name: str, default: int) -> int:
    from django.conf import settings
    return int(getattr(settings, name, default)) if settings.configured else default


def vector_cap() -> int:
    return _cap('NTFS_DENSE_VECTOR_CAP', DENSE_VECTOR_CAP)


def matrix_cap() -> int:
    return _cap('NTFS_DENSE_MATRIX_CAP', DENSE_MATRIX_CAP)


@dataclass
class DenseState:
    """A state vector or density matrix over 2^n_qubits basis states."""
    data: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        dim = 2 ** self.n_qubits
        if self.data.ndim == 1:
            if self.n_qubits > vector_cap():
                raise CapacityError(f'dense vectors are limited to {vector_cap()} qubits')
            if self.data.shape != (dim,):
                raise ContractViolation(f'vector of length {dim} expected')
        elif self.data.ndim == 2:
            if self.n_qubits > matrix_cap():
                raise CapacityError(f'density matrices are limited to {matrix_cap()} qubits')
            if self.data.shape != (dim, dim):
                raise ContractViolation(f'{dim}x{dim} density matrix expected')
        else:
            raise ContractViolation('dense states are vectors or matrices')

    @property
    def is_density_matrix(self) -> bool:
        return self.data.ndim == 2

    def density_matrix(self) -> np.ndarray:
        if self.is_density_matrix:
            return self.data
        return np.outer(self.data, self.data.conj())

    def check_physical(self, tol: float = PSD_TOLERANCE) -> Dict[str, float]:
        rho = self.density_matrix()
        hermiticity = float(np.abs(rho - rho.conj().T).max())
        trace = complex(np.trace(rho))
        min_eig = float(linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if hermiticity > tol or abs(trace - 1.0) > tol or min_eig < -tol:
            raise ContractViolation(
                f'unphysical density matrix (hermiticity {hermiticity:.2e}, trace {trace:.6f}, min eig {min_eig:.2e})'
            )
        return {'hermiticity': hermiticity, 'trace': trace.real, 'min_eigenvalue': min_eig}


def dense_hamiltonian(hamiltonian: PauliOperator) -> np.ndarray:
    if hamiltonian.n_sites > vector_cap():
        raise CapacityError(f'{hamiltonian.n_sites} sites exceed the dense cap of {vector_cap()}')
    return to_sparse(hamiltonian).toarray()


def ground_state_energy(hamiltonian: PauliOperator) -> float:
    return float(linalg.eigvalsh(dense_hamiltonian(hamiltonian))[0])


def ed_thermal(hamiltonian: PauliOperator, beta: float) -> DenseState:
    """rho = e^{-beta H} / Z by eigendecomposition."""
    if beta < 0:
        raise ContractViolation(f'beta must be non-negative, got {beta}')
    if hamiltonian.n_sites > matrix_cap():
        raise CapacityError(f'{hamiltonian.n_sites} sites exceed the density-matrix cap of {matrix_cap()}')
    energies, vectors = linalg.eigh(dense_hamiltonian(hamiltonian))
    boltzmann = np.exp(-beta * (energies - energies[0]))
    rho = (vectors * (boltzmann / boltzmann.sum())) @ vectors.conj().T
    return DenseState(0.5 * (rho + rho.conj().T), hamiltonian.n_sites)


def expectation(state: DenseState, op: PauliOperator) -> complex:
    matrix = to_sparse(op)
    if state.is_density_matrix:
        return complex((matrix @ state.data).trace())
    vector = state.data
    return complex(np.vdot(vector, matrix @ vector) / np.vdot(vector, vector))


def ed_evolve(rho: DenseState, hamiltonian: PauliOperator, t_grid: Sequence[float],
              observables: Dict[str, PauliOperator]) -> List[Dict[str, float]]:
    """Observable rows of rho(t) = U rho U^dagger, U = e^{-i H t}."""
    if not rho.is_density_matrix:
        raise ContractViolation('ed_evolve propagates density matrices')
    energies, vectors = linalg.eigh(dense_hamiltonian(hamiltonian))
    rho_eigen = vectors.conj().T @ rho.data @ vectors
    matrices = {name: to_sparse(op) for name, op in observables.items()}
    rows = []
    for t in t_grid:
        phases = np.exp(-1j * energies * t)
        rho_t = vectors @ (phases[:, None] * rho_eigen * phases.conj()[None, :]) @ vectors.conj().T
        row = {'t': float(t)}
        for name, matrix in matrices.items():
            row[name] = float(np.real((matrix @ rho_t).trace()))
        rows.append(row)
    return rows


def taylor_purification(hamiltonian: PauliOperator, beta: float, max_slice: float = 0.1,
                        tol: float = 1e-16) -> DenseState:
    """
    e^{-beta H / 2} applied to the identity purification by Taylor series.

    The exponent is split into slices of norm at most max_slice; the result
    is the normalized doubled vector indexed idx(physical) 2^N + idx(aux).
    """
    n = hamiltonian.n_sites
    if 2 * n > vector_cap():
        raise CapacityError(f'purifications are limited to {vector_cap() // 2} sites')
    h = dense_hamiltonian(hamiltonian)
    tau = 0.5 * beta
    norm = max(float(np.abs(h).sum(axis=1).max()), 1e-300)
    n_slices = max(1, int(np.ceil(tau * norm / max_slice)))
    d_tau = tau / n_slices

    propagated = np.eye(2 ** n, dtype=np.complex128)
    for _ in range(n_slices):
        term = propagated
        total = propagated.copy()
        k = 1
        while True:
            term = (-d_tau / k) * (h @ term)
            total += term
            if np.abs(term).max() < tol * np.abs(total).max():
                break
            k += 1
        propagated = total
    vector = propagated.reshape(-1)
    return DenseState(vector / np.linalg.norm(vector), 2 * n)


def partial_trace(purification: np.ndarray, n_sites: int) -> np.ndarray:
    """Tr_aux |v><v| for a doubled vector, normalized to unit trace."""
    m = np.asarray(purification, dtype=np.complex128).reshape(2 ** n_sites, 2 ** n_sites)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def purification_vector(state: VariationalState) -> np.ndarray:
    """Normalized amplitudes over every doubled configuration in dense order."""
    configs = doubled_configurations(state.n_sites)
    log_psi = state.log_amplitude(configs)
    vector = exp_scaled(log_psi, max_finite_real(log_psi))
    return vector / np.linalg.norm(vector)


def reduced_density_matrix(state: VariationalState) -> DenseState:
    """
    Physical density matrix of an enumerated variational purification.

    The auxiliary trace is basis independent, so X-basis states need no
    rotation.
    """
    if state.n_sites > matrix_cap() or 2 * state.n_sites > vector_cap():
        raise CapacityError(f'{state.n_sites} sites exceed the dense caps')
    rho = partial_trace(purification_vector(state), state.n_sites)
    return DenseState(0.5 * (rho + rho.conj().T), state.n_sites)
