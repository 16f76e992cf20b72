"""
Tests for lattice geometry and Pauli operators
"""
import numpy as np
from django.test import TestCase

from ntfsim.exceptions import ContractViolation, InvalidGeometryError

from .lattice import Boundary, LatticeKind, build_lattice, critical_field
from .pauli import (
    PauliOperator, basis_configurations, build_tfim, configuration_index, operator_row, to_sparse,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


class LatticeTests(TestCase):
    """Test chain and square geometries"""

    def test_periodic_chain(self):
        lattice = build_lattice('chain', 4, 'periodic')
        self.assertEqual(lattice.n_sites, 4)
        self.assertEqual(set(lattice.edges), {(0, 1), (1, 2), (2, 3), (3, 0)})

    def test_open_chain(self):
        lattice = build_lattice('chain', 4, 'open')
        self.assertEqual(lattice.n_edges, 3)

    def test_extent_two_keeps_single_bond(self):
        """Test that the wrap-around bond of a length-2 ring is not doubled"""
        self.assertEqual(build_lattice('chain', 2, 'periodic').edges, ((0, 1),))
        square = build_lattice('square', 2, 'periodic')
        self.assertEqual(square.n_edges, 4)

    def test_square_periodic_edge_count(self):
        lattice = build_lattice(LatticeKind.SQUARE, (3, 3), Boundary.PERIODIC)
        self.assertEqual(lattice.n_sites, 9)
        self.assertEqual(lattice.n_edges, 18)
        self.assertEqual(lattice.coordinates(5), (1, 2))

    def test_invalid_geometry(self):
        with self.assertRaises(InvalidGeometryError):
            build_lattice('chain', 1)
        with self.assertRaises(InvalidGeometryError):
            build_lattice('square', (3,))
        with self.assertRaises(InvalidGeometryError):
            build_lattice('triangle', 3)

    def test_critical_field(self):
        self.assertEqual(critical_field('chain'), 1.0)
        self.assertAlmostEqual(critical_field('square', J=2.0), 6.08876)


class PauliOperatorTests(TestCase):
    """Test Pauli-string operators and their rows"""

    def test_terms_are_merged(self):
        op = PauliOperator([(1.0, {0: 'Z'}), (2.0, {0: 'Z'}), (1.0, {1: 'X'})], 2)
        self.assertEqual(len(op), 2)
        self.assertEqual(op.terms[0][0], 3.0)

    def test_invalid_terms(self):
        with self.assertRaises(ContractViolation):
            PauliOperator([(1.0, {0: 'Q'})], 1)
        with self.assertRaises(ContractViolation):
            PauliOperator([(1.0, {2: 'X'})], 2)

    def test_y_row_convention(self):
        """Test <x|Y|flip x> = -i s(x)"""
        y = PauliOperator.single(0, 'Y', 1)
        self.assertEqual(operator_row(y, [1]), [((-1,), -1j)])
        self.assertEqual(operator_row(y, [-1]), [((1,), 1j)])

    def test_cancelling_terms_are_dropped_from_rows(self):
        # X - i Y sends down to up with amplitude 2 and kills up
        op = PauliOperator([(1.0, {0: 'X'}), (-1j, {0: 'Y'})], 1)
        self.assertEqual(operator_row(op, [1]), [])
        self.assertEqual(operator_row(op, [-1]), [((1,), 2.0)])

    def test_basis_index_order(self):
        configs = basis_configurations(3)
        np.testing.assert_array_equal(configs[0], [1, 1, 1])
        np.testing.assert_array_equal(configs[1], [1, 1, -1])
        np.testing.assert_array_equal(configuration_index(configs), np.arange(8))

    def test_sparse_matches_kronecker(self):
        op = PauliOperator([(0.5, {0: 'Y', 1: 'Z'}), (-1.5, {1: 'X'})], 2)
        expected = 0.5 * np.kron(Y, Z) - 1.5 * np.kron(I2, X)
        np.testing.assert_allclose(to_sparse(op).toarray(), expected)

    def test_tfim_matrix(self):
        lattice = build_lattice('chain', 2, 'open')
        hamiltonian = build_tfim(lattice, J=1.0, h_T=0.7, h_L=0.2)
        expected = (np.kron(Z, Z) - 0.7 * (np.kron(X, I2) + np.kron(I2, X))
                    + 0.2 * (np.kron(Z, I2) + np.kron(I2, Z)))
        np.testing.assert_allclose(to_sparse(hamiltonian).toarray(), expected)
        self.assertTrue(hamiltonian.is_hermitian())

    def test_dict_round_trip(self):
        hamiltonian = build_tfim(build_lattice('chain', 3), 1.0, 1.0)
        self.assertEqual(PauliOperator.from_dict(hamiltonian.to_dict()), hamiltonian)
