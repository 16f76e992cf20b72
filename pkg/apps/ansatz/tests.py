"""
Tests for the variational architectures
"""
import numpy as np
from django.test import TestCase

from apps.thermofield.algebra import AuxBasis, DoubledConfiguration, doubled_configurations, identity_amplitudes
from ntfsim.exceptions import BasisMismatchError, ContractViolation, DomainError, SchemaError

from .arnno import ArnnoXState, ArnnoZState
from .base import Architecture
from .mean_field import wrap_mean_field
from .rbmo import RbmoState, init_rbmo_factorized, log_cosh
from .registry import AnsatzRegistry


def _random_rbmo(n_sites=3, alpha=1, scale=0.1, seed=0):
    rng = np.random.default_rng(seed)
    state = RbmoState.identity(n_sites, alpha)
    theta = scale * (rng.normal(size=state.n_parameters) + 1j * rng.normal(size=state.n_parameters))
    return state.with_parameters(theta)


class RbmoTests(TestCase):
    """Test the RBM operator"""

    def test_identity_initialization(self):
        """Test that the identity RBMO is the delta pairing of physical and auxiliary spins"""
        state = RbmoState.identity(3)
        configs = doubled_configurations(3)
        psi = np.exp(state.log_amplitude(configs))
        np.testing.assert_allclose(psi, identity_amplitudes(configs), atol=1e-12)

    def test_parameter_count(self):
        state = RbmoState.identity(4, alpha=2)
        self.assertEqual(state.n_hidden, 8)
        self.assertEqual(state.n_parameters, 2 * 4 + 8 + 2 * 8 * 4)

    def test_bad_alpha(self):
        with self.assertRaises(ContractViolation):
            RbmoState.identity(3, alpha=0)

    def test_log_derivatives_match_finite_differences(self):
        state = _random_rbmo()
        configs = doubled_configurations(3)[::7]
        derivatives = state.log_derivatives(configs)
        eps = 1e-6
        for k in (0, 4, 7, 12, state.n_parameters - 1):
            shift = np.zeros(state.n_parameters, dtype=complex)
            shift[k] = eps
            numeric = (state.with_parameters(state.parameters + shift).log_amplitude(configs)
                       - state.with_parameters(state.parameters - shift).log_amplitude(configs)) / (2 * eps)
            np.testing.assert_allclose(derivatives[:, k], numeric, atol=1e-6)

    def test_amplitude_derivatives_agree_with_log_derivatives(self):
        state = _random_rbmo()
        configs = doubled_configurations(3)[:10]
        psi, d_psi = state.amplitude_derivatives(configs, log_scale=0.0)
        np.testing.assert_allclose(psi, np.exp(state.log_amplitude(configs)))
        np.testing.assert_allclose(d_psi, psi[:, None] * state.log_derivatives(configs), atol=1e-12)

    def test_amplitude_derivatives_are_finite_at_zeros(self):
        state = RbmoState.identity(2)
        configs = doubled_configurations(2)
        psi, d_psi = state.amplitude_derivatives(configs)
        self.assertTrue(np.all(np.isfinite(d_psi)))
        self.assertEqual(int(np.count_nonzero(psi)), 4)

    def test_log_derivatives_at_zero_raise(self):
        state = RbmoState.identity(2)
        with self.assertRaises(DomainError):
            state.log_derivatives(DoubledConfiguration((1, 1), (1, -1)))

    def test_log_cosh_is_overflow_safe(self):
        values = log_cosh(np.array([800.0 + 0.3j, -800.0, 0.2j]))
        self.assertTrue(np.all(np.isfinite(values)))
        self.assertAlmostEqual(values[1].real, 800.0 - np.log(2.0))
        self.assertAlmostEqual(values[2], np.log(np.cos(0.2)))

    def test_factorized_initialization(self):
        rng = np.random.default_rng(3)
        g_a, g_b, g_W = 0.1 * rng.normal(size=2), 0.1 * rng.normal(size=2), 0.1 * rng.normal(size=(2, 2))
        state = RbmoState.from_params(init_rbmo_factorized(g_a, g_b, g_W))
        log_g = lambda s: g_a @ s + np.sum(np.log(np.cosh(g_b + g_W @ s)))  # noqa: E731
        configs = doubled_configurations(2)
        expected = np.array([log_g(c[:2]) + log_g(c[2:]) for c in configs.astype(float)])
        np.testing.assert_allclose(state.log_amplitude(configs), expected, atol=1e-12)

    def test_basis_tag_is_checked(self):
        with self.assertRaises(BasisMismatchError):
            RbmoState.identity(1).log_amplitude(DoubledConfiguration((1,), (1,), AuxBasis.X))


class MeanFieldTests(TestCase):
    """Test the pair-factor wrapper"""

    def test_zero_mu_keeps_identity(self):
        state = wrap_mean_field(RbmoState.identity(2))
        configs = doubled_configurations(2)
        psi = np.exp(state.log_amplitude(configs))
        np.testing.assert_allclose(psi, identity_amplitudes(configs), atol=1e-12)

    def test_pair_factor(self):
        inner = _random_rbmo(n_sites=2)
        state = wrap_mean_field(inner, mu=np.array([0.5, 0.25]))
        config = np.array([1, 1, 1, -1], dtype=np.int8)
        self.assertAlmostEqual(state.log_amplitude(config) - inner.log_amplitude(config), np.log(0.25))

    def test_mu_derivatives(self):
        state = wrap_mean_field(_random_rbmo(n_sites=2), mu=np.array([0.5, 0.25]))
        config = np.array([[1, -1, -1, 1]], dtype=np.int8)
        derivatives = state.log_derivatives(config)
        np.testing.assert_allclose(derivatives[0, -2:], [2.0, 4.0])

    def test_rotated_inner_is_rejected(self):
        with self.assertRaises(BasisMismatchError):
            wrap_mean_field(ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0)))


class ArnnoTests(TestCase):
    """Test the autoregressive operator"""

    def test_rotated_identity(self):
        """Test that the ArnnoX identity matches the rotated identity up to a global phase"""
        state = ArnnoXState.identity(2, hidden_size=4, rng=np.random.default_rng(1))
        configs = doubled_configurations(2)
        psi = np.exp(state.log_amplitude(configs))
        ratio = psi / identity_amplitudes(configs, AuxBasis.X)
        np.testing.assert_allclose(np.abs(ratio), 0.5)
        np.testing.assert_allclose(ratio, ratio[0])

    def test_masked_identity(self):
        state = ArnnoZState.identity(3, hidden_size=4, rng=np.random.default_rng(2))
        self.assertEqual(state.mu, 0.0)
        configs = doubled_configurations(3)
        born = np.abs(np.exp(state.log_amplitude(configs))) ** 2
        self.assertAlmostEqual(float(born.sum()), 1.0)
        np.testing.assert_array_equal(born > 0, identity_amplitudes(configs).real > 0)

    def test_normalized_after_perturbation(self):
        state = ArnnoXState.identity(2, hidden_size=4, rng=np.random.default_rng(3))
        theta = state.parameters + 0.3 * np.random.default_rng(4).normal(size=state.n_parameters)
        state = state.with_parameters(theta)
        born = np.abs(np.exp(state.log_amplitude(doubled_configurations(2)))) ** 2
        self.assertAlmostEqual(float(born.sum()), 1.0)

    def test_negative_mu_sign(self):
        """Test that ln psi keeps the sign of a negative pair factor"""
        state = ArnnoZState.identity(2, hidden_size=4, rng=np.random.default_rng(6))
        theta = state.parameters + 0.2 * np.random.default_rng(7).normal(size=state.n_parameters)
        theta[-1] = -0.4
        state = state.with_parameters(theta)
        configs = doubled_configurations(2)
        psi, _ = state.amplitude_derivatives(configs, log_scale=0.0)
        np.testing.assert_allclose(np.exp(state.log_amplitude(configs)), psi, atol=1e-12)
        self.assertAlmostEqual(state.mu, -0.4)

    def test_real_parameters_only(self):
        state = ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
        with self.assertRaises(ContractViolation):
            state.with_parameters(state.parameters + 1j)

    def test_conditionals(self):
        state = ArnnoZState.identity(2, hidden_size=4, rng=np.random.default_rng(5))
        probs, phases = state.conditionals([0])
        self.assertAlmostEqual(float(probs.sum()), 1.0)
        np.testing.assert_allclose(probs, [0.5, 0.0, 0.0, 0.5])
        self.assertEqual(phases.shape, (4,))
        with self.assertRaises(ContractViolation):
            state.conditionals([0, 3])

    def test_log_derivatives_match_finite_differences(self):
        state = ArnnoXState.identity(2, hidden_size=3, rng=np.random.default_rng(6))
        state = state.with_parameters(state.parameters + 0.2 * np.random.default_rng(7).normal(size=state.n_parameters))
        configs = doubled_configurations(2)[::3]
        derivatives = state.log_derivatives(configs)
        eps = 1e-6
        for k in (0, state.n_parameters // 2, state.n_parameters - 1):
            shift = np.zeros(state.n_parameters)
            shift[k] = eps
            numeric = (state.with_parameters(state.parameters + shift).log_amplitude(configs)
                       - state.with_parameters(state.parameters - shift).log_amplitude(configs)) / (2 * eps)
            np.testing.assert_allclose(derivatives[:, k], numeric, atol=1e-6)

    def test_ancestral_samples_follow_support(self):
        state = ArnnoZState.identity(3, hidden_size=4, rng=np.random.default_rng(8))
        configs = state.ancestral_sample(200, np.random.default_rng(9))
        np.testing.assert_array_equal(configs[:, :3], configs[:, 3:])


class RegistryTests(TestCase):
    """Test descriptor round trips"""

    def test_rebuild_every_architecture(self):
        rng = np.random.default_rng(0)
        states = [
            _random_rbmo(),
            ArnnoXState.identity(2, hidden_size=3, rng=rng),
            ArnnoZState.identity(2, hidden_size=3, rng=rng),
            wrap_mean_field(_random_rbmo(), mu=np.array([0.1, 0.2, 0.3])),
        ]
        for state in states:
            rebuilt = AnsatzRegistry.build(state.descriptor(), state.parameters)
            self.assertIs(type(rebuilt), type(state))
            configs = doubled_configurations(state.n_sites)[:8]
            np.testing.assert_allclose(np.exp(rebuilt.log_amplitude(configs)), np.exp(state.log_amplitude(configs)))

    def test_parameter_count_mismatch(self):
        state = _random_rbmo()
        with self.assertRaises(SchemaError):
            AnsatzRegistry.build(state.descriptor(), state.parameters[:-1])

    def test_unknown_architecture(self):
        with self.assertRaises(SchemaError):
            AnsatzRegistry.get('transformer')
        self.assertIn(Architecture.RBMO.value, AnsatzRegistry.list_architectures())
