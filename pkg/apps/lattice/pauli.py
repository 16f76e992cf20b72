"""
Pauli-string operators on ±1 spin configurations.

Spins are stored as int8 arrays with up = +1. Basis states of N sites are
indexed with site 0 as the most significant bit and down = 1, which matches
the Kronecker order numpy.kron produces.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from ntfsim.exceptions import ContractViolation

from .lattice import Lattice

logger = logging.getLogger(__name__)

PAULI_LETTERS = ('X', 'Y', 'Z')

PauliString = Tuple[Tuple[int, str], ...]
TermInput = Tuple[complex, Union[Mapping[int, str], Sequence[Tuple[int, str]]]]


def _normalize_string(string, n_sites: int) -> PauliString:
    items = string.items() if isinstance(string, Mapping) else string
    normalized: Dict[int, str] = {}
    for site, letter in items:
        site = int(site)
        letter = str(letter).upper()
        if letter not in PAULI_LETTERS:
            raise ContractViolation(f'unknown Pauli letter {letter!r}')
        if not 0 <= site < n_sites:
            raise ContractViolation(f'site {site} out of range for {n_sites} sites')
        if site in normalized:
            raise ContractViolation(f'site {site} appears twice in one Pauli string')
        normalized[site] = letter
    return tuple(sorted(normalized.items()))


@dataclass(frozen=True)
class _FlipGroup:
    """Terms sharing one flip pattern; they connect x to the same x'."""
    flip: np.ndarray          # (N,) bool
    parity_masks: np.ndarray  # (M, N) int, Z or Y sites per member
    factors: np.ndarray       # (M,) complex, coefficient * (-i)^(number of Y)


class PauliOperator:
    """Weighted sum of Pauli strings; equal strings are merged on construction."""

    def __init__(self, terms: Iterable[TermInput], n_sites: int, atol: float = 0.0):
        if n_sites < 1:
            raise ContractViolation('an operator needs at least one site')
        self.n_sites = int(n_sites)

        merged: Dict[PauliString, complex] = {}
        for coefficient, string in terms:
            key = _normalize_string(string, self.n_sites)
            merged[key] = merged.get(key, 0j) + complex(coefficient)

        self.terms: Tuple[Tuple[complex, PauliString], ...] = tuple(
            (coefficient, string)
            for string, coefficient in sorted(merged.items())
            if abs(coefficient) > atol
        )
        self._groups = None

    @classmethod
    def zero(cls, n_sites: int) -> 'PauliOperator':
        return cls([], n_sites)

    @classmethod
    def single(cls, site: int, letter: str, n_sites: int, coefficient: complex = 1.0) -> 'PauliOperator':
        return cls([(coefficient, {site: letter})], n_sites)

    @classmethod
    def product(cls, string: Mapping[int, str], n_sites: int, coefficient: complex = 1.0) -> 'PauliOperator':
        return cls([(coefficient, string)], n_sites)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return self.n_sites == other.n_sites and self.terms == other.terms

    def __hash__(self):
        return hash((self.n_sites, self.terms))

    def __repr__(self) -> str:
        parts = []
        for coefficient, string in self.terms:
            label = ''.join(f'{letter}{site}' for site, letter in string) or 'I'
            parts.append(f'({coefficient:.6g}){label}')
        return f'PauliOperator[{self.n_sites}]({" + ".join(parts) or "0"})'

    def _check_compatible(self, other: 'PauliOperator'):
        if self.n_sites != other.n_sites:
            raise ContractViolation(
                f'operators act on {self.n_sites} and {other.n_sites} sites'
            )

    def __add__(self, other: 'PauliOperator') -> 'PauliOperator':
        self._check_compatible(other)
        return PauliOperator(self.terms + other.terms, self.n_sites)

    def __sub__(self, other: 'PauliOperator') -> 'PauliOperator':
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> 'PauliOperator':
        return PauliOperator(
            [(scalar * coefficient, string) for coefficient, string in self.terms],
            self.n_sites,
        )

    __rmul__ = __mul__

    def __neg__(self) -> 'PauliOperator':
        return (-1.0) * self

    def map_terms(self, fn: Callable[[complex, PauliString], Tuple[complex, PauliString]]) -> 'PauliOperator':
        """Rebuild the operator with fn applied to every (coefficient, string)."""
        return PauliOperator([fn(c, s) for c, s in self.terms], self.n_sites)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        # Pauli strings are Hermitian themselves
        return all(abs(coefficient.imag) <= tol for coefficient, _ in self.terms)

    def is_diagonal(self) -> bool:
        return all(letter == 'Z' for _, string in self.terms for _, letter in string)

    def to_dict(self) -> Dict:
        return {
            'n_sites': self.n_sites,
            'terms': [
                {
                    'coefficient': [coefficient.real, coefficient.imag],
                    'string': {str(site): letter for site, letter in string},
                }
                for coefficient, string in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'PauliOperator':
        terms = [
            (complex(*term['coefficient']), {int(k): v for k, v in term['string'].items()})
            for term in data['terms']
        ]
        return cls(terms, data['n_sites'])

    # sparse rows

    def _compile(self) -> List[_FlipGroup]:
        if self._groups is not None:
            return self._groups

        buckets: Dict[Tuple[int, ...], List[Tuple[np.ndarray, complex]]] = {}
        for coefficient, string in self.terms:
            flip = np.zeros(self.n_sites, dtype=bool)
            mask = np.zeros(self.n_sites, dtype=np.int64)
            n_y = 0
            for site, letter in string:
                if letter in ('X', 'Y'):
                    flip[site] = True
                if letter in ('Z', 'Y'):
                    mask[site] = 1
                if letter == 'Y':
                    n_y += 1
            # <x|Y|flip x> = -i * s(x)
            factor = coefficient * (-1j) ** n_y
            buckets.setdefault(tuple(np.flatnonzero(flip)), []).append((mask, factor))

        groups = []
        for flipped_sites, members in buckets.items():
            flip = np.zeros(self.n_sites, dtype=bool)
            flip[list(flipped_sites)] = True
            groups.append(_FlipGroup(
                flip=flip,
                parity_masks=np.stack([m for m, _ in members]),
                factors=np.array([f for _, f in members], dtype=np.complex128),
            ))
        self._groups = groups
        return groups

    @property
    def n_connections(self) -> int:
        return len(self._compile())

    def connected(self, configs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Row elements for a batch of configurations.

        Returns (conn, amps) with conn of shape (B, K, N) and amps of shape
        (B, K) such that amps[b, k] = <configs[b]|O|conn[b, k]>. Entries may be
        zero when terms cancel.
        """
        configs = np.asarray(configs)
        if configs.ndim != 2 or configs.shape[1] != self.n_sites:
            raise ContractViolation(
                f'expected configurations of length {self.n_sites}, got shape {configs.shape}'
            )
        groups = self._compile()
        batch = configs.shape[0]
        if not groups:
            return (np.zeros((batch, 0, self.n_sites), dtype=configs.dtype),
                    np.zeros((batch, 0), dtype=np.complex128))

        down = (configs < 0).astype(np.int64)
        conn = np.empty((batch, len(groups), self.n_sites), dtype=configs.dtype)
        amps = np.empty((batch, len(groups)), dtype=np.complex128)
        for k, group in enumerate(groups):
            conn[:, k, :] = np.where(group.flip, -configs, configs)
            parity = (down @ group.parity_masks.T) % 2
            amps[:, k] = ((1 - 2 * parity) * group.factors).sum(axis=1)
        return conn, amps


def operator_row(op: PauliOperator, spin_assignment: Sequence[int]) -> List[Tuple[Tuple[int, ...], complex]]:
    """All (x', <x|O|x'>) with nonzero amplitude for a single assignment x."""
    if len(spin_assignment) != op.n_sites:
        raise ContractViolation(
            f'assignment has {len(spin_assignment)} sites, operator spans {op.n_sites}'
        )
    if any(s not in (-1, 1) for s in spin_assignment):
        raise ContractViolation('spins must be +1 or -1')

    conn, amps = op.connected(np.asarray([spin_assignment], dtype=np.int8))
    row: Dict[Tuple[int, ...], complex] = {}
    for target, amplitude in zip(conn[0], amps[0]):
        key = tuple(int(s) for s in target)
        row[key] = row.get(key, 0j) + complex(amplitude)
    return [(key, amp) for key, amp in row.items() if amp != 0]


def basis_configurations(n_sites: int) -> np.ndarray:
    """All 2^N spin configurations in basis-index order, shape (2^N, N)."""
    indices = np.arange(2 ** n_sites)
    bits = (indices[:, None] >> np.arange(n_sites - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def configuration_index(configs: np.ndarray) -> np.ndarray:
    configs = np.atleast_2d(configs)
    bits = (configs < 0).astype(np.int64)
    weights = 1 << np.arange(configs.shape[1] - 1, -1, -1)
    return bits @ weights


def to_sparse(op: PauliOperator) -> sparse.csr_matrix:
    """Matrix of the operator in the 2^N computational basis, assembled row by row."""
    dim = 2 ** op.n_sites
    configs = basis_configurations(op.n_sites)
    conn, amps = op.connected(configs)
    rows = np.repeat(np.arange(dim), conn.shape[1])
    cols = configuration_index(conn.reshape(-1, op.n_sites))
    matrix = sparse.csr_matrix((amps.ravel(), (rows, cols)), shape=(dim, dim))
    matrix.eliminate_zeros()
    return matrix


def build_tfim(lattice: Lattice, J: float, h_T: float, h_L: float = 0.0) -> PauliOperator:
    """J sum_<ij> Z_i Z_j - h_T sum_i X_i + h_L sum_i Z_i"""
    n = lattice.n_sites
    terms: List[TermInput] = []
    for i, j in lattice.edges:
        terms.append((J, {i: 'Z', j: 'Z'}))
    for i in range(n):
        terms.append((-h_T, {i: 'X'}))
        terms.append((h_L, {i: 'Z'}))
    hamiltonian = PauliOperator(terms, n)
    logger.debug('Built TFIM on %d sites with %d terms', n, len(hamiltonian))
    return hamiltonian
