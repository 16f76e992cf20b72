"""
Tests for the exact and METTS reference oracles
"""
import numpy as np
from django.test import TestCase, override_settings, tag

from apps.ansatz.rbmo import RbmoState
from apps.lattice.lattice import build_lattice
from apps.lattice.pauli import PauliOperator, build_tfim
from apps.observables.suite import standard_observable_suite
from ntfsim.exceptions import CapacityError, ContractViolation

from .exact import (
    DenseState, dense_hamiltonian, ed_evolve, ed_thermal, expectation, ground_state_energy, partial_trace,
    reduced_density_matrix, taylor_purification,
)
from .metts import hadamard_all, imaginary_time_evolve, metts_run, product_state


def _chain_tfim(n=3, h_T=0.8, h_L=0.0):
    return build_tfim(build_lattice('chain', n, 'periodic'), J=1.0, h_T=h_T, h_L=h_L)


class ExactTests(TestCase):
    """Test dense thermal states and dynamics"""

    def test_infinite_temperature(self):
        rho = ed_thermal(_chain_tfim(), 0.0)
        np.testing.assert_allclose(rho.data, np.eye(8) / 8, atol=1e-12)
        rho.check_physical()

    def test_single_spin_field(self):
        field = PauliOperator.single(0, 'X', 1, coefficient=-1.0)
        rho = ed_thermal(field, 0.7)
        self.assertAlmostEqual(expectation(rho, PauliOperator.single(0, 'X', 1)).real, np.tanh(0.7))

    def test_ground_state_energy(self):
        # two spins, open chain: J ZZ only
        hamiltonian = build_tfim(build_lattice('chain', 2, 'open'), J=1.0, h_T=0.0)
        self.assertAlmostEqual(ground_state_energy(hamiltonian), -1.0)

    def test_taylor_purification_matches_thermal_state(self):
        hamiltonian = _chain_tfim(h_L=0.3)
        purification = taylor_purification(hamiltonian, 1.2)
        self.assertEqual(purification.n_qubits, 6)
        rho = partial_trace(purification.data, 3)
        np.testing.assert_allclose(rho, ed_thermal(hamiltonian, 1.2).data, atol=1e-10)

    def test_identity_state_reduces_to_maximally_mixed(self):
        rho = reduced_density_matrix(RbmoState.identity(2))
        np.testing.assert_allclose(rho.data, np.eye(4) / 4, atol=1e-12)

    def test_thermal_state_is_stationary(self):
        hamiltonian = _chain_tfim()
        rho = ed_thermal(hamiltonian, 0.5)
        zz = standard_observable_suite(build_lattice('chain', 3, 'periodic'))[0].operator
        rows = ed_evolve(rho, hamiltonian, [0.0, 0.5, 1.0], {'zz': zz})
        self.assertEqual([r['t'] for r in rows], [0.0, 0.5, 1.0])
        for row in rows:
            self.assertAlmostEqual(row['zz'], rows[0]['zz'])

    def test_quench_conserves_energy(self):
        rho = ed_thermal(_chain_tfim(h_T=2.0), 0.5)
        quench = _chain_tfim(h_T=0.5)
        rows = ed_evolve(rho, quench, np.linspace(0, 2, 5), {'energy': quench, 'x': PauliOperator.single(0, 'X', 3)})
        energies = [r['energy'] for r in rows]
        np.testing.assert_allclose(energies, energies[0], atol=1e-10)
        self.assertGreater(abs(rows[-1]['x'] - rows[0]['x']), 1e-3)

    def test_ed_evolve_needs_density_matrix(self):
        vector = DenseState(np.array([1.0, 0.0]), 1)
        with self.assertRaises(ContractViolation):
            ed_evolve(vector, PauliOperator.single(0, 'X', 1), [0.0], {})

    @override_settings(NTFS_DENSE_MATRIX_CAP=2)
    def test_density_matrix_cap(self):
        with self.assertRaises(CapacityError):
            ed_thermal(_chain_tfim(), 1.0)

    def test_unphysical_state(self):
        with self.assertRaises(ContractViolation):
            DenseState(np.diag([1.0, 1.0]), 1).check_physical()


class MettsTests(TestCase):
    """Test minimally entangled typical thermal states"""

    def test_product_states(self):
        plus = product_state(np.array([0, 0]), 'X')
        np.testing.assert_allclose(plus, np.full(4, 0.5))
        np.testing.assert_allclose(hadamard_all(plus, 2), [1, 0, 0, 0], atol=1e-12)
        self.assertEqual(int(np.argmax(np.abs(product_state(np.array([1, 0]), 'Z')))), 2)

    def test_long_imaginary_time_reaches_ground_state(self):
        hamiltonian = build_tfim(build_lattice('chain', 2, 'open'), J=1.0, h_T=0.8)
        h = dense_hamiltonian(hamiltonian)
        start = np.full(4, 0.5, dtype=complex)
        phi, deviation = imaginary_time_evolve(h, start, 20.0)
        self.assertAlmostEqual(np.vdot(phi, h @ phi).real, ground_state_energy(hamiltonian), places=5)
        self.assertLess(deviation, 1e-5)

    @tag('slow')
    def test_matches_exact_thermal_values(self):
        hamiltonian = _chain_tfim(n=2, h_T=1.0)
        lattice = build_lattice('chain', 2, 'periodic')
        specs = standard_observable_suite(lattice, hamiltonian)
        beta = 1.0
        result = metts_run(hamiltonian, beta, specs, 1200, np.random.default_rng(0),
                           n_chains=2, workers=2, discard=20)
        self.assertEqual(result.n_samples, 1200)
        rho = ed_thermal(hamiltonian, beta)
        for spec in specs:
            exact = expectation(rho, spec.operator).real
            self.assertLess(abs(result.mean(spec.name) - exact), 5 * result.stderr(spec.name) + 0.03,
                            msg=spec.name)

    def test_invalid_arguments(self):
        hamiltonian = _chain_tfim(n=2)
        with self.assertRaises(ContractViolation):
            metts_run(hamiltonian, -1.0, [], 10, np.random.default_rng(0))
        with self.assertRaises(ContractViolation):
            metts_run(hamiltonian, 1.0, [], 2, np.random.default_rng(0), n_chains=4)

    def test_sample_count_is_exact(self):
        hamiltonian = _chain_tfim(n=2)
        specs = standard_observable_suite(build_lattice('chain', 2, 'periodic'), hamiltonian)[:1]
        result = metts_run(hamiltonian, 0.5, specs, 7, np.random.default_rng(1), n_chains=2, discard=1)
        self.assertEqual(result.n_samples, 7)

    @override_settings(NTFS_DENSE_VECTOR_CAP=1)
    def test_capacity(self):
        with self.assertRaises(CapacityError):
            metts_run(_chain_tfim(n=2), 1.0, [], 4, np.random.default_rng(0))
