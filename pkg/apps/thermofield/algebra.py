"""
Thermofield algebra on doubled configurations.

A doubled configuration of N sites is stored as one int8 array of length 2N:
physical spins first, auxiliary spins second. In the rotated basis the
auxiliary slot holds X eigenvalues with |+> mapped to +1.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from scipy import sparse

from apps.lattice.pauli import PauliOperator, PauliString, basis_configurations, to_sparse
from ntfsim.exceptions import BasisMismatchError, ContractViolation


class AuxBasis(str, Enum):
    Z = 'aux_z'
    X = 'aux_x'


class Combination(str, Enum):
    PHYSICAL_ONLY = 'physical_only'
    DIFFERENCE = 'difference'


@dataclass(frozen=True)
class DoubledConfiguration:
    physical: Tuple[int, ...]
    auxiliary: Tuple[int, ...]
    basis: AuxBasis = AuxBasis.Z

    def __post_init__(self):
        object.__setattr__(self, 'physical', tuple(int(s) for s in self.physical))
        object.__setattr__(self, 'auxiliary', tuple(int(s) for s in self.auxiliary))
        object.__setattr__(self, 'basis', AuxBasis(self.basis))
        if len(self.physical) != len(self.auxiliary):
            raise ContractViolation('physical and auxiliary parts must have equal length')
        if any(s not in (-1, 1) for s in self.physical + self.auxiliary):
            raise ContractViolation('spins must be +1 or -1')

    @property
    def n_sites(self) -> int:
        return len(self.physical)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.physical + self.auxiliary, dtype=np.int8)

    @classmethod
    def from_array(cls, array: Sequence[int], basis: AuxBasis = AuxBasis.Z) -> 'DoubledConfiguration':
        array = [int(s) for s in array]
        n = len(array) // 2
        return cls(tuple(array[:n]), tuple(array[n:]), basis)


def _flip_y_sign(string: PauliString) -> int:
    return -1 if sum(1 for _, letter in string if letter == 'Y') % 2 else 1


def tilde_conjugate(op: PauliOperator) -> PauliOperator:
    """Entrywise complex conjugate: X -> X, Z -> Z, Y -> -Y, coefficients conjugated."""
    return op.map_terms(lambda c, s: (np.conj(c) * _flip_y_sign(s), s))


_HADAMARD_LETTER = {'X': 'Z', 'Z': 'X', 'Y': 'Y'}


def hadamard_conjugate(op: PauliOperator) -> PauliOperator:
    """Per-site Hadamard conjugation: X <-> Z, Y -> -Y."""
    return op.map_terms(lambda c, s: (
        c * _flip_y_sign(s),
        tuple((site, _HADAMARD_LETTER[letter]) for site, letter in s),
    ))


@dataclass(frozen=True)
class ThermofieldOperator:
    """
    physical_part (x) 1  [- 1 (x) auxiliary_part]

    auxiliary_part is the zero operator for physical_only combinations.
    aux_rotated records that the auxiliary part has been conjugated by the
    per-site Hadamard.
    """
    physical_part: PauliOperator
    auxiliary_part: PauliOperator
    combination: Combination
    aux_rotated: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'combination', Combination(self.combination))
        if self.physical_part.n_sites != self.auxiliary_part.n_sites:
            raise ContractViolation('physical and auxiliary parts span different sites')
        if self.combination == Combination.DIFFERENCE:
            expected = tilde_conjugate(self.physical_part)
            if self.aux_rotated:
                expected = hadamard_conjugate(expected)
            if expected != self.auxiliary_part:
                raise ContractViolation('auxiliary part must be the tilde conjugate of the physical part')
        elif len(self.auxiliary_part):
            raise ContractViolation('physical_only operators have no auxiliary part')

    @property
    def n_sites(self) -> int:
        return self.physical_part.n_sites

    @property
    def n_connections(self) -> int:
        return self.physical_part.n_connections + self.auxiliary_part.n_connections

    def connected(self, configs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Row elements on doubled configurations, (B, 2N) -> (B, K, 2N), (B, K).

        The auxiliary contribution enters with a minus sign.
        """
        configs = np.asarray(configs)
        n = self.n_sites
        if configs.ndim != 2 or configs.shape[1] != 2 * n:
            raise ContractViolation(f'expected doubled configurations of length {2 * n}')
        physical, auxiliary = configs[:, :n], configs[:, n:]

        conn_p, amps_p = self.physical_part.connected(physical)
        k_p = conn_p.shape[1]
        doubled_p = np.concatenate(
            [conn_p, np.broadcast_to(auxiliary[:, None, :], (configs.shape[0], k_p, n))], axis=2
        )
        if self.combination == Combination.PHYSICAL_ONLY:
            return doubled_p, amps_p

        conn_a, amps_a = self.auxiliary_part.connected(auxiliary)
        k_a = conn_a.shape[1]
        doubled_a = np.concatenate(
            [np.broadcast_to(physical[:, None, :], (configs.shape[0], k_a, n)), conn_a], axis=2
        )
        return (np.concatenate([doubled_p, doubled_a], axis=1),
                np.concatenate([amps_p, -amps_a], axis=1))


def thermofield_hamiltonian(hamiltonian: PauliOperator) -> ThermofieldOperator:
    if not hamiltonian.is_hermitian():
        raise ContractViolation('the thermofield Hamiltonian is defined for Hermitian H only')
    return ThermofieldOperator(
        physical_part=hamiltonian,
        auxiliary_part=tilde_conjugate(hamiltonian),
        combination=Combination.DIFFERENCE,
    )


def lift_physical(op: PauliOperator) -> ThermofieldOperator:
    return ThermofieldOperator(
        physical_part=op,
        auxiliary_part=PauliOperator.zero(op.n_sites),
        combination=Combination.PHYSICAL_ONLY,
    )


def rotate_auxiliary(op: ThermofieldOperator) -> ThermofieldOperator:
    return ThermofieldOperator(
        physical_part=op.physical_part,
        auxiliary_part=hadamard_conjugate(op.auxiliary_part),
        combination=op.combination,
        aux_rotated=not op.aux_rotated,
    )


def identity_amplitudes(configs: np.ndarray, basis: AuxBasis = AuxBasis.Z) -> np.ndarray:
    """Unnormalized identity-state amplitudes for a batch of doubled configurations."""
    configs = np.atleast_2d(configs)
    n = configs.shape[1] // 2
    physical, auxiliary = configs[:, :n], configs[:, n:]
    if AuxBasis(basis) == AuxBasis.Z:
        return np.all(physical == auxiliary, axis=1).astype(np.complex128)
    minus = np.sum((physical < 0) & (auxiliary < 0), axis=1)
    return (1 - 2 * (minus % 2)) * 2.0 ** (-n / 2) + 0j


def identity_amplitude(config: DoubledConfiguration) -> complex:
    if config.basis != AuxBasis.Z:
        raise BasisMismatchError('identity_amplitude is defined in the auxiliary Z basis')
    return complex(identity_amplitudes(config.as_array()[None, :], AuxBasis.Z)[0])


def rotated_identity_amplitude(config: DoubledConfiguration) -> complex:
    if config.basis != AuxBasis.X:
        raise BasisMismatchError('rotated_identity_amplitude is defined in the auxiliary X basis')
    return complex(identity_amplitudes(config.as_array()[None, :], AuxBasis.X)[0])


def doubled_configurations(n_sites: int) -> np.ndarray:
    """All 4^N doubled configurations in dense-index order."""
    return basis_configurations(2 * n_sites)


def dense_thermofield(op: ThermofieldOperator) -> sparse.csr_matrix:
    """Sparse 4^N matrix; index = idx(physical) * 2^N + idx(auxiliary)."""
    eye = sparse.identity(2 ** op.n_sites, format='csr', dtype=np.complex128)
    matrix = sparse.kron(to_sparse(op.physical_part), eye, format='csr')
    if op.combination == Combination.DIFFERENCE:
        matrix = matrix - sparse.kron(eye, to_sparse(op.auxiliary_part), format='csr')
    return matrix.tocsr()


def local_indices(configs: np.ndarray) -> np.ndarray:
    """Per-site pair index k = 2 b(sigma) + b(aux) with b(+1) = 0, b(-1) = 1; shape (B, N)."""
    configs = np.atleast_2d(configs)
    n = configs.shape[1] // 2
    physical = (configs[:, :n] < 0).astype(np.int64)
    auxiliary = (configs[:, n:] < 0).astype(np.int64)
    return 2 * physical + auxiliary


def configs_from_local(local: np.ndarray) -> np.ndarray:
    local = np.atleast_2d(local)
    physical = 1 - 2 * (local // 2)
    auxiliary = 1 - 2 * (local % 2)
    return np.concatenate([physical, auxiliary], axis=1).astype(np.int8)
