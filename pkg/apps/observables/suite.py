"""
Standard observable suite: nearest-neighbour ZZ and YY, transverse X and
energy per site.
"""
from typing import List, Optional

from apps.lattice.lattice import Lattice
from apps.lattice.pauli import PauliOperator
from ntfsim.exceptions import ContractViolation

from .estimators import ObservableSpec, Reduction


def _correlator(lattice: Lattice, letter: str, pair_mode: Reduction) -> PauliOperator:
    n = lattice.n_sites
    if pair_mode == Reduction.SINGLE_PAIR:
        i, j = lattice.edges[0]
        return PauliOperator.product({i: letter, j: letter}, n)
    scale = 1.0 / lattice.n_edges
    return PauliOperator([(scale, {i: letter, j: letter}) for i, j in lattice.edges], n)


def standard_observable_suite(lattice: Lattice, hamiltonian: Optional[PauliOperator] = None,
                              pair_mode: Reduction = Reduction.BOND_AVERAGE) -> List[ObservableSpec]:
    """
    Four specs: zz, yy, x and energy_per_site.

    Correlators average over every bond unless pair_mode is single_pair, in
    which case they sit on the first bond. Without a Hamiltonian the energy
    spec is left out.
    """
    pair_mode = Reduction(pair_mode)
    if pair_mode == Reduction.SITE_AVERAGE:
        raise ContractViolation('correlators are reduced per pair or per bond')
    if lattice.n_edges == 0:
        raise ContractViolation('lattice has no bonds')
    n = lattice.n_sites
    specs = [
        ObservableSpec('zz', _correlator(lattice, 'Z', pair_mode), pair_mode),
        ObservableSpec('yy', _correlator(lattice, 'Y', pair_mode), pair_mode),
        ObservableSpec('x', PauliOperator([(1.0 / n, {i: 'X'}) for i in range(n)], n), Reduction.SITE_AVERAGE),
    ]
    if hamiltonian is not None:
        if hamiltonian.n_sites != n:
            raise ContractViolation('Hamiltonian and lattice disagree on the number of sites')
        specs.append(ObservableSpec('energy_per_site', hamiltonian * (1.0 / n), Reduction.SITE_AVERAGE))
    return specs
