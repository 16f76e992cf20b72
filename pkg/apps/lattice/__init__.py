"""
Spin lattices and Pauli-string operators.

- Lattice: chain or square geometry with open/periodic boundaries
- PauliOperator: deduplicated weighted sum of Pauli strings with sparse
  row extraction
- build_tfim: generalized transverse-field Ising Hamiltonian

Usage:
    from apps.lattice.lattice import build_lattice
    from apps.lattice.pauli import build_tfim, operator_row

    lattice = build_lattice('chain', 10, 'periodic')
    hamiltonian = build_tfim(lattice, J=1.0, h_T=2.0, h_L=0.0)
"""

default_app_config = 'apps.lattice.apps.LatticeConfig'
