"""
Tests for the doubled-space algebra
"""
import numpy as np
from django.test import TestCase

from apps.lattice.lattice import build_lattice
from apps.lattice.pauli import PauliOperator, build_tfim
from ntfsim.exceptions import BasisMismatchError, ContractViolation

from .algebra import (
    AuxBasis, Combination, DoubledConfiguration, ThermofieldOperator, configs_from_local,
    dense_thermofield, doubled_configurations, identity_amplitude, identity_amplitudes,
    lift_physical, local_indices, rotate_auxiliary, rotated_identity_amplitude,
    thermofield_hamiltonian, tilde_conjugate,
)


def _tfim(n=3, h_L=0.3):
    return build_tfim(build_lattice('chain', n, 'periodic'), J=1.0, h_T=0.8, h_L=h_L)


class IdentityStateTests(TestCase):
    """Test the identity state in both auxiliary bases"""

    def test_identity_support(self):
        self.assertEqual(identity_amplitude(DoubledConfiguration((1, -1), (1, -1))), 1.0)
        self.assertEqual(identity_amplitude(DoubledConfiguration((1, -1), (1, 1))), 0.0)

    def test_rotated_identity_signs(self):
        config = DoubledConfiguration((-1, -1), (-1, 1), AuxBasis.X)
        self.assertAlmostEqual(rotated_identity_amplitude(config), -0.5)

    def test_basis_tag_is_checked(self):
        with self.assertRaises(BasisMismatchError):
            identity_amplitude(DoubledConfiguration((1,), (1,), AuxBasis.X))
        with self.assertRaises(BasisMismatchError):
            rotated_identity_amplitude(DoubledConfiguration((1,), (1,)))

    def test_rotated_identity_is_normalized(self):
        amplitudes = identity_amplitudes(doubled_configurations(3), AuxBasis.X)
        self.assertAlmostEqual(float(np.sum(np.abs(amplitudes) ** 2)), 8.0)

    def test_local_index_round_trip(self):
        configs = doubled_configurations(2)
        local = local_indices(configs)
        np.testing.assert_array_equal(local[0], [0, 0])
        np.testing.assert_array_equal(configs_from_local(local), configs)


class ThermofieldOperatorTests(TestCase):
    """Test tilde conjugation and the thermofield Hamiltonian"""

    def test_tilde_flips_y(self):
        op = PauliOperator([(2.0, {0: 'Y'}), (1.0, {1: 'X'})], 2)
        tilde = tilde_conjugate(op)
        self.assertEqual(tilde, PauliOperator([(-2.0, {0: 'Y'}), (1.0, {1: 'X'})], 2))

    def test_identity_is_annihilated(self):
        """Test (H x 1 - 1 x H~)|I> = 0"""
        op = thermofield_hamiltonian(_tfim())
        identity = identity_amplitudes(doubled_configurations(3))
        residual = dense_thermofield(op) @ identity
        self.assertLess(np.max(np.abs(residual)), 1e-12)

    def test_rotated_identity_is_annihilated(self):
        op = rotate_auxiliary(thermofield_hamiltonian(_tfim()))
        self.assertTrue(op.aux_rotated)
        identity = identity_amplitudes(doubled_configurations(3), AuxBasis.X)
        residual = dense_thermofield(op) @ identity
        self.assertLess(np.max(np.abs(residual)), 1e-12)

    def test_rotation_is_an_involution(self):
        op = thermofield_hamiltonian(_tfim())
        self.assertEqual(rotate_auxiliary(rotate_auxiliary(op)), op)

    def test_connected_matches_dense(self):
        op = thermofield_hamiltonian(_tfim(n=2))
        configs = doubled_configurations(2)
        conn, amps = op.connected(configs[5:6])
        dense = dense_thermofield(op).toarray()
        row = np.zeros(16, dtype=complex)
        index = (conn[0] < 0).astype(int) @ (1 << np.arange(3, -1, -1))
        np.add.at(row, index, amps[0])
        np.testing.assert_allclose(row, dense[5])

    def test_non_hermitian_is_rejected(self):
        with self.assertRaises(ContractViolation):
            thermofield_hamiltonian(PauliOperator([(1j, {0: 'X'})], 1))

    def test_inconsistent_parts_are_rejected(self):
        h = _tfim()
        with self.assertRaises(ContractViolation):
            ThermofieldOperator(h, h * 2.0, Combination.DIFFERENCE)
        with self.assertRaises(ContractViolation):
            ThermofieldOperator(h, h, Combination.PHYSICAL_ONLY)

    def test_lifted_observable_acts_on_physical_half(self):
        lifted = lift_physical(PauliOperator.single(0, 'X', 1))
        conn, amps = lifted.connected(np.array([[1, -1]], dtype=np.int8))
        np.testing.assert_array_equal(conn[0, 0], [-1, -1])
        self.assertEqual(amps[0, 0], 1.0)
