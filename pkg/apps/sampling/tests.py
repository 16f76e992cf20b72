"""
Tests for sampling backends
"""
import numpy as np
from django.test import TestCase
from scipy import stats

from apps.ansatz.arnno import ArnnoXState, ArnnoZState
from apps.ansatz.rbmo import RbmoState
from apps.lattice.pauli import configuration_index
from apps.thermofield.algebra import AuxBasis, DoubledConfiguration
from ntfsim.exceptions import BasisMismatchError, CapacityError, ContractViolation, SeedingError

from .batch import SampleBatch, SampleSource, concatenate
from .direct import direct_sample
from .enumeration import enumerate_all
from .metropolis import identity_support_seeds, metropolis_sample, propose
from .prior import PriorConfig, prior_density, sample_prior


class EnumerationTests(TestCase):
    """Test the exact backend"""

    def test_identity_weights(self):
        batch = enumerate_all(RbmoState.identity(3))
        self.assertEqual(batch.size, 64)
        self.assertAlmostEqual(float(batch.weights.sum()), 1.0)
        self.assertEqual(batch.diagnostics['support_size'], 8)
        np.testing.assert_allclose(batch.weights[batch.weights > 0], 1.0 / 8)

    def test_capacity(self):
        with self.assertRaises(CapacityError):
            enumerate_all(RbmoState.identity(3), max_sites=2)


class MetropolisTests(TestCase):
    """Test Markov chains on |psi|^2"""

    def test_identity_chains_stay_on_support(self):
        state = RbmoState.identity(4)
        batch = metropolis_sample(state, n_chains=4, n_samples=200, sweep_factor=2,
                                  rng=np.random.default_rng(0), burn_in=5)
        self.assertEqual(batch.size, 200)
        self.assertEqual(batch.n_chains, 4)
        self.assertTrue(batch.is_markov)
        np.testing.assert_array_equal(batch.configs[:, :4], batch.configs[:, 4:])
        # only joint pair flips are accepted
        self.assertAlmostEqual(batch.diagnostics['acceptance_rate'], 1.0 / 3.0, delta=0.1)

    def test_workers_give_same_layout(self):
        state = RbmoState.identity(3)
        batch = metropolis_sample(state, 6, 60, 1, np.random.default_rng(1), burn_in=2, workers=3)
        self.assertEqual(batch.chain_view(np.arange(batch.size)).shape, (6, 10))

    def test_workers_keep_amplitudes_consistent(self):
        """Test that threaded chains on a torch-backed state record the amplitude of every sample"""
        state = ArnnoXState.identity(2, hidden_size=4, rng=np.random.default_rng(5))
        state = state.with_parameters(state.parameters + 0.3 * np.random.default_rng(6).normal(size=state.n_parameters))
        batch = metropolis_sample(state, 8, 400, 1, np.random.default_rng(7), burn_in=5, workers=4)
        np.testing.assert_allclose(batch.log_amplitudes, state.log_amplitude(batch.configs), atol=1e-10)

    def test_matches_born_distribution(self):
        state = RbmoState.identity(2)
        rng = np.random.default_rng(8)
        state = state.with_parameters(0.3 * (rng.normal(size=state.n_parameters) + 1j * rng.normal(size=state.n_parameters)))
        exact = enumerate_all(state)
        probabilities = np.zeros(16)
        probabilities[configuration_index(exact.configs)] = exact.weights

        batch = metropolis_sample(state, 50, 20000, 8, np.random.default_rng(9), burn_in=20)
        counts = np.bincount(configuration_index(batch.configs), minlength=16)
        # loose threshold: thinned chains still carry some correlation
        _, p_value = stats.chisquare(counts, batch.size * probabilities)
        self.assertGreater(p_value, 1e-6)

    def test_same_seed_same_chains(self):
        state = RbmoState.identity(3)
        first = metropolis_sample(state, 4, 40, 1, np.random.default_rng(11), burn_in=2, workers=2)
        second = metropolis_sample(state, 4, 40, 1, np.random.default_rng(11), burn_in=2, workers=2)
        np.testing.assert_array_equal(first.configs, second.configs)

    def test_zero_amplitude_seed(self):
        state = RbmoState.identity(2)
        seeds = np.array([[1, 1, 1, -1]], dtype=np.int8)
        with self.assertRaises(SeedingError):
            metropolis_sample(state, 1, 10, 1, np.random.default_rng(0), seeds=seeds)

    def test_seeds_match_basis(self):
        rng = np.random.default_rng(2)
        seeds = identity_support_seeds(10, 3, AuxBasis.Z, rng)
        np.testing.assert_array_equal(seeds[:, :3], seeds[:, 3:])
        self.assertEqual(identity_support_seeds(10, 3, AuxBasis.X, rng).shape, (10, 6))

    def test_propose_flips_one_pair_slot(self):
        rng = np.random.default_rng(3)
        current = np.ones((50, 6), dtype=np.int8)
        changed = (propose(current, rng) != current).sum(axis=1)
        self.assertTrue(np.all((changed == 1) | (changed == 2)))

    def test_bad_arguments(self):
        with self.assertRaises(ContractViolation):
            metropolis_sample(RbmoState.identity(2), 8, 4, 1, np.random.default_rng(0))


class DirectSamplingTests(TestCase):
    """Test ancestral sampling"""

    def test_direct_batch(self):
        state = ArnnoXState.identity(3, hidden_size=4, rng=np.random.default_rng(0))
        batch = direct_sample(state, 100, np.random.default_rng(1))
        self.assertEqual(batch.source, SampleSource.BORN_DIRECT)
        self.assertEqual(batch.basis, AuxBasis.X)
        self.assertTrue(np.all(np.isfinite(batch.log_amplitudes.real)))

    def test_matches_born_distribution(self):
        state = ArnnoXState.identity(3, hidden_size=3, rng=np.random.default_rng(2))
        theta = state.parameters + 0.4 * np.random.default_rng(3).normal(size=state.n_parameters)
        state = state.with_parameters(theta)
        exact = enumerate_all(state)
        probabilities = np.zeros(64)
        probabilities[configuration_index(exact.configs)] = exact.weights

        batch = direct_sample(state, 100000, np.random.default_rng(4))
        counts = np.bincount(configuration_index(batch.configs), minlength=64)
        support = probabilities > 1e-12
        self.assertEqual(counts[~support].sum(), 0)
        expected = 100000 * probabilities[support] / probabilities[support].sum()
        _, p_value = stats.chisquare(counts[support], expected)
        self.assertGreater(p_value, 1e-4)

    def test_same_seed_same_samples(self):
        state = ArnnoZState.identity(2, hidden_size=4, rng=np.random.default_rng(0))
        first = direct_sample(state, 200, np.random.default_rng(12))
        second = direct_sample(state, 200, np.random.default_rng(12))
        np.testing.assert_array_equal(first.configs, second.configs)

    def test_rbmo_cannot_be_sampled_directly(self):
        with self.assertRaises(ContractViolation):
            direct_sample(RbmoState.identity(2), 10, np.random.default_rng(0))


class PriorTests(TestCase):
    """Test the Hamming-kernel prior"""

    def test_local_distribution(self):
        np.testing.assert_allclose(PriorConfig(2).local_distribution(), [1 / 3, 1 / 6, 1 / 6, 1 / 3])

    def test_density(self):
        prior = PriorConfig(2)
        self.assertAlmostEqual(prior_density(DoubledConfiguration((1, 1), (1, 1)), prior), 1 / 9)
        self.assertAlmostEqual(prior_density(DoubledConfiguration((1, 1), (1, -1)), prior), 1 / 18)
        with self.assertRaises(BasisMismatchError):
            prior_density(DoubledConfiguration((1,), (1,), AuxBasis.X), PriorConfig(1))

    def test_importance_weights(self):
        """Test that E_q[1/q] recovers the number of configurations"""
        batch = sample_prior(PriorConfig(2), 40000, np.random.default_rng(4))
        self.assertEqual(batch.source, SampleSource.PRIOR_Q)
        self.assertAlmostEqual(float(batch.weights.mean()), 16.0, delta=0.5)

    def test_same_seed_same_draws(self):
        first = sample_prior(PriorConfig(3), 100, np.random.default_rng(13))
        second = sample_prior(PriorConfig(3), 100, np.random.default_rng(13))
        np.testing.assert_array_equal(first.configs, second.configs)
        np.testing.assert_array_equal(first.weights, second.weights)

    def test_kernel_base_must_exceed_one(self):
        with self.assertRaises(ContractViolation):
            PriorConfig(2, kernel_base=1.0)


class BatchTests(TestCase):
    """Test batch provenance checks"""

    def test_weights_required_for_weighted_sources(self):
        configs = np.ones((2, 4), dtype=np.int8)
        with self.assertRaises(ContractViolation):
            SampleBatch(configs, AuxBasis.Z, SampleSource.PRIOR_Q)
        with self.assertRaises(ContractViolation):
            SampleBatch(configs, AuxBasis.Z, SampleSource.BORN_DIRECT, weights=np.ones(2))

    def test_concatenate_keeps_order(self):
        state = ArnnoZState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
        first = direct_sample(state, 5, np.random.default_rng(1))
        second = direct_sample(state, 7, np.random.default_rng(2))
        joined = concatenate([first, second])
        self.assertEqual(joined.size, 12)
        np.testing.assert_array_equal(joined.configs[5:], second.configs)
