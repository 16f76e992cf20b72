"""
Tests for observable estimators and the standard suite
"""
import numpy as np
from django.test import TestCase

from apps.ansatz.arnno import ArnnoXState
from apps.ansatz.rbmo import RbmoState
from apps.lattice.lattice import build_lattice
from apps.lattice.pauli import PauliOperator, build_tfim
from apps.oracles.exact import expectation, reduced_density_matrix
from apps.sampling.enumeration import enumerate_all
from apps.sampling.metropolis import metropolis_sample
from ntfsim.exceptions import ContractViolation

from .estimators import ObservableSpec, Reduction, binning_error, estimate
from .suite import standard_observable_suite


def _random_rbmo(n_sites=2, scale=0.3, seed=0):
    rng = np.random.default_rng(seed)
    state = RbmoState.identity(n_sites)
    theta = scale * (rng.normal(size=state.n_parameters) + 1j * rng.normal(size=state.n_parameters))
    return state.with_parameters(theta)


class SuiteTests(TestCase):
    """Test the standard observable suite"""

    def setUp(self):
        self.lattice = build_lattice('chain', 4, 'periodic')
        self.hamiltonian = build_tfim(self.lattice, 1.0, 0.5)

    def test_names(self):
        specs = standard_observable_suite(self.lattice, self.hamiltonian)
        self.assertEqual([s.name for s in specs], ['zz', 'yy', 'x', 'energy_per_site'])
        self.assertEqual(len(standard_observable_suite(self.lattice)), 3)

    def test_bond_average(self):
        zz = standard_observable_suite(self.lattice)[0].operator
        self.assertEqual(len(zz), 4)
        self.assertAlmostEqual(zz.terms[0][0], 0.25)

    def test_single_pair(self):
        specs = standard_observable_suite(self.lattice, pair_mode=Reduction.SINGLE_PAIR)
        self.assertEqual(specs[0].operator, PauliOperator.product({0: 'Z', 1: 'Z'}, 4))

    def test_site_average_is_not_a_pair_mode(self):
        with self.assertRaises(ContractViolation):
            standard_observable_suite(self.lattice, pair_mode='site_average')

    def test_mismatched_hamiltonian(self):
        with self.assertRaises(ContractViolation):
            standard_observable_suite(self.lattice, build_tfim(build_lattice('chain', 3), 1.0, 0.5))


class EstimatorTests(TestCase):
    """Test estimates against the enumerated density matrix"""

    def test_identity_is_infinite_temperature(self):
        lattice = build_lattice('chain', 3, 'periodic')
        for state in (RbmoState.identity(3), ArnnoXState.identity(3, hidden_size=3, rng=np.random.default_rng(0))):
            batch = enumerate_all(state)
            for spec in standard_observable_suite(lattice):
                result = estimate(state, spec, batch)
                self.assertAlmostEqual(result.mean, 0.0, msg=spec.name)
                self.assertEqual(result.stderr, 0.0)

    def test_enumeration_matches_density_matrix(self):
        state = _random_rbmo()
        lattice = build_lattice('chain', 2, 'open')
        rho = reduced_density_matrix(state)
        batch = enumerate_all(state)
        for spec in standard_observable_suite(lattice, build_tfim(lattice, 1.0, 0.7)):
            result = estimate(state, spec, batch)
            self.assertAlmostEqual(result.mean.real, expectation(rho, spec.operator).real, msg=spec.name)

    def test_markov_estimate(self):
        state = _random_rbmo()
        spec = ObservableSpec('zz', PauliOperator.product({0: 'Z', 1: 'Z'}, 2), Reduction.SINGLE_PAIR)
        batch = metropolis_sample(state, 8, 8000, 2, np.random.default_rng(1), burn_in=20)
        result = estimate(state, spec, batch)
        exact = expectation(reduced_density_matrix(state), spec.operator).real
        self.assertGreater(result.stderr, 0.0)
        self.assertLess(abs(result.mean.real - exact), 5 * result.stderr + 0.02)
        self.assertEqual(result.n, 8000)

    def test_site_count_must_match(self):
        spec = ObservableSpec('x', PauliOperator.single(0, 'X', 3), Reduction.SITE_AVERAGE)
        state = RbmoState.identity(2)
        with self.assertRaises(ContractViolation):
            estimate(state, spec, enumerate_all(state))

    def test_spec_needs_pauli_operator(self):
        with self.assertRaises(ContractViolation):
            ObservableSpec('bad', np.eye(2), Reduction.SITE_AVERAGE)


class BinningTests(TestCase):
    """Test the binning error analysis"""

    def test_independent_samples(self):
        chains = np.random.default_rng(0).normal(size=(16, 1000))
        stderr, tau = binning_error(chains)
        self.assertAlmostEqual(stderr, 1.0 / np.sqrt(16000), delta=0.3 / np.sqrt(16000))
        self.assertLess(tau, 1.0)

    def test_correlated_samples(self):
        values = np.random.default_rng(1).normal(size=(8, 64))
        chains = np.repeat(values, 16, axis=1)
        _, tau = binning_error(chains)
        self.assertGreater(tau, 4.0)

    def test_constant_series(self):
        self.assertEqual(binning_error(np.ones((4, 100))), (0.0, 0.5))
