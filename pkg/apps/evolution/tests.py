"""
Tests for the contour steppers and their shared machinery
"""
import numpy as np
from django.test import TestCase, tag

from apps.ansatz.arnno import ArnnoXState
from apps.ansatz.rbmo import RbmoParams, RbmoState
from apps.lattice.lattice import build_lattice
from apps.lattice.pauli import PauliOperator, build_tfim
from apps.sampling.enumeration import enumerate_all
from apps.sampling.prior import PriorConfig, sample_prior
from apps.thermofield.algebra import (
    DoubledConfiguration, dense_thermofield, doubled_configurations, lift_physical,
    rotate_auxiliary, thermofield_hamiltonian,
)
from ntfsim.exceptions import BasisMismatchError, ContractViolation, DomainError, EvolutionError, StepRejected

from .bias import bias_term_report
from .integrators import Integrator, integrate_step
from .local_energy import local_energy, local_values
from .pite import estimate_fidelity, pite_step, propagated_amplitudes
from .qgt import estimate_qgt_forces, parameter_velocity, solve_regularized
from .retry import RetryPolicy, run_with_retry
from .sr import sr_step
from .state import Backend, EvolutionConfig, EvolutionState, PiteSettings, Segment
from .tvmc import tvmc_step


def _random_rbmo(n_sites=2, scale=0.2, seed=0):
    rng = np.random.default_rng(seed)
    state = RbmoState.identity(n_sites)
    theta = scale * (rng.normal(size=state.n_parameters) + 1j * rng.normal(size=state.n_parameters))
    return state.with_parameters(theta)


def _dense_expectation(state, op):
    psi = np.exp(state.log_amplitude(doubled_configurations(state.n_sites)))
    return complex(psi.conj() @ (dense_thermofield(op) @ psi) / (psi.conj() @ psi))


def _field(n_sites, h=1.0):
    return PauliOperator([(-h, {i: 'X'}) for i in range(n_sites)], n_sites)


class IntegratorTests(TestCase):
    """Test Runge-Kutta steppers on theta' = -theta"""

    def test_orders(self):
        theta = np.array([1.0])
        f = lambda x: -x  # noqa: E731
        exact = np.exp(-0.1)
        self.assertAlmostEqual(integrate_step(theta, 0.1, f, Integrator.EULER)[0], 0.9)
        self.assertAlmostEqual(integrate_step(theta, 0.1, f, Integrator.RK2)[0], 1 - 0.1 + 0.005)
        self.assertAlmostEqual(integrate_step(theta, 0.1, f, 'rk4')[0], exact, places=6)


class RetryTests(TestCase):
    """Test step rejection and retries"""

    def test_step_halves_until_accepted(self):
        sizes = []

        def attempt(step):
            sizes.append(step)
            if len(sizes) < 3:
                raise StepRejected('too large')
            return step

        result = run_with_retry(RetryPolicy(max_retries=3, step_factor=0.5), 0.4, attempt)
        self.assertEqual(sizes, [0.4, 0.2, 0.1])
        self.assertEqual(result, 0.1)

    def test_exhausted_retries(self):
        def attempt(step):
            raise StepRejected('always', {'energy_magnitude': 99.0})

        with self.assertRaises(EvolutionError) as ctx:
            run_with_retry(RetryPolicy(max_retries=2), 1.0, attempt)
        self.assertEqual(ctx.exception.diagnostics['retries'], 2)
        self.assertEqual(ctx.exception.diagnostics['last_step'], 0.25)
        self.assertEqual(ctx.exception.diagnostics['energy_magnitude'], 99.0)


class RegularizedSolveTests(TestCase):
    """Test the eigenvalue-cutoff pseudo-inverse"""

    def test_small_eigenvalues_are_dropped(self):
        G = np.diag([2.0, 1e-9])
        result = solve_regularized(G, np.array([2.0, 5.0]), svd_atol=1e-7)
        np.testing.assert_allclose(result.velocity, [1.0, 0.0])
        self.assertEqual(result.n_kept, 1)
        self.assertEqual(result.min_kept, 2.0)

    def test_everything_below_cutoff(self):
        result = solve_regularized(np.diag([1e-9, 1e-10]), np.array([1.0, 1.0]), svd_atol=1e-7)
        self.assertEqual(result.n_kept, 0)
        self.assertIsNone(result.min_kept)
        np.testing.assert_array_equal(result.velocity, [0.0, 0.0])

    def test_rotated_basis(self):
        rotation = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        G = rotation @ np.diag([4.0, 1.0]) @ rotation.T
        rhs = np.array([1.0, 3.0])
        result = solve_regularized(G, rhs, svd_atol=1e-7)
        np.testing.assert_allclose(G @ result.velocity, rhs)

    def test_cutoff_must_be_positive(self):
        with self.assertRaises(ContractViolation):
            solve_regularized(np.eye(2), np.ones(2), svd_atol=0.0)


class LocalEnergyTests(TestCase):
    """Test local estimators"""

    def test_identity_local_energy_is_diagonal_part(self):
        hamiltonian = build_tfim(build_lattice('chain', 3, 'periodic'), J=1.0, h_T=0.5)
        state = RbmoState.identity(3)
        config = DoubledConfiguration((1, 1, 1), (1, 1, 1))
        self.assertAlmostEqual(local_energy(state, config, lift_physical(hamiltonian)), 3.0)

    def test_identity_is_stationary_under_thermofield_hamiltonian(self):
        hamiltonian = build_tfim(build_lattice('chain', 3, 'periodic'), J=1.0, h_T=0.5, h_L=0.1)
        state = RbmoState.identity(3)
        batch = enumerate_all(state)
        support = batch.configs[batch.weights > 0]
        values = local_values(state, support, thermofield_hamiltonian(hamiltonian))
        self.assertLess(np.max(np.abs(values)), 1e-12)

    def test_zero_amplitude_is_rejected(self):
        state = RbmoState.identity(2)
        with self.assertRaises(DomainError):
            local_values(state, np.array([[1, 1, -1, 1]]), lift_physical(_field(2)))

    def test_operator_basis_must_match(self):
        op = thermofield_hamiltonian(_field(2))
        with self.assertRaises(BasisMismatchError):
            local_values(RbmoState.identity(2), doubled_configurations(2)[:1], rotate_auxiliary(op))
        state = ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
        with self.assertRaises(BasisMismatchError):
            local_values(state, doubled_configurations(2)[:1], op)


class QgtTests(TestCase):
    """Test QGT and forces against dense expressions"""

    def setUp(self):
        self.state = _random_rbmo()
        self.hamiltonian = build_tfim(build_lattice('chain', 2, 'open'), J=1.0, h_T=0.7, h_L=0.2)
        self.op = lift_physical(self.hamiltonian)

    def test_enumeration_matches_dense(self):
        forces = estimate_qgt_forces(self.state, enumerate_all(self.state), self.op)

        configs = doubled_configurations(2)
        psi = np.exp(self.state.log_amplitude(configs))
        p = np.abs(psi) ** 2 / np.sum(np.abs(psi) ** 2)
        O = self.state.log_derivatives(configs)
        e_loc = (dense_thermofield(self.op) @ psi) / psi
        mean_O = p @ O
        G = (O.conj().T * p) @ O - np.outer(mean_O.conj(), mean_O)
        F = (O.conj().T * p) @ e_loc - mean_O.conj() * (p @ e_loc)

        self.assertAlmostEqual(forces.E_mean, _dense_expectation(self.state, self.op))
        np.testing.assert_allclose(forces.G, G, atol=1e-10)
        np.testing.assert_allclose(forces.F, F, atol=1e-10)
        self.assertGreater(np.linalg.eigvalsh(forces.G).min(), -1e-10)

    def test_prior_batch_energy(self):
        batch = sample_prior(PriorConfig(2), 20000, np.random.default_rng(0))
        forces = estimate_qgt_forces(self.state, batch, self.op)
        self.assertAlmostEqual(forces.E_mean.real, _dense_expectation(self.state, self.op).real, delta=0.1)
        self.assertLess(forces.diagnostics['effective_samples'], 20000)

    def test_real_time_velocity_of_holomorphic_state(self):
        forces = estimate_qgt_forces(self.state, enumerate_all(self.state), self.op)
        imaginary = parameter_velocity(forces, True, False, 1e-10)
        real = parameter_velocity(forces, True, True, 1e-10)
        np.testing.assert_allclose(real.velocity, 1j * imaginary.velocity, atol=1e-10)


class BiasTests(TestCase):
    """Test the zero-amplitude force bias"""

    def test_identity_force_lives_on_zeros(self):
        state = RbmoState.identity(2)
        report = bias_term_report(state, enumerate_all(state), _field(2))
        self.assertEqual(report.n_zeros, 12)
        self.assertAlmostEqual(report.standard_force_norm, 0.0)
        self.assertGreater(report.bias_norm, 0.1)
        self.assertEqual(report.ratio, np.inf)

    def test_needs_enumeration(self):
        state = _random_rbmo()
        batch = sample_prior(PriorConfig(2), 10, np.random.default_rng(0))
        with self.assertRaises(ContractViolation):
            bias_term_report(state, batch, _field(2))


class PiteTests(TestCase):
    """Test projected imaginary-time steps"""

    def test_propagated_amplitudes_match_dense(self):
        state = _random_rbmo()
        op = lift_physical(build_tfim(build_lattice('chain', 2, 'open'), 1.0, 0.7))
        configs = doubled_configurations(2)
        tau = 0.1
        phi = propagated_amplitudes(state, op, configs, tau, order=2, log_scale=0.0)
        psi = np.exp(state.log_amplitude(configs))
        H = dense_thermofield(op).toarray()
        expected = psi - tau * H @ psi + 0.5 * tau ** 2 * H @ H @ psi
        np.testing.assert_allclose(phi, expected, atol=1e-12)

    def test_estimate_fidelity(self):
        psi = np.array([1.0, 1j, 0.0])
        weights = np.ones(3)
        self.assertAlmostEqual(estimate_fidelity(psi, 2.0 * psi, weights), 1.0)
        self.assertAlmostEqual(estimate_fidelity(psi, np.array([0.0, 0.0, 1.0]), weights), 0.0)

    def test_step_leaves_identity_support(self):
        """Test that a p-ITE step from the identity reproduces tanh(beta h) for free spins"""
        config = EvolutionConfig(
            step=0.05,
            backend=Backend.ENUMERATION,
            pite=PiteSettings(max_iterations=3000, infidelity_threshold=1e-7),
        )
        evolution_state = EvolutionState(RbmoState.identity(2))
        evolved = pite_step(evolution_state, _field(2), config)

        self.assertAlmostEqual(evolved.beta, 0.1)
        self.assertEqual(evolved.step_index, 1)
        self.assertLess(evolved.diagnostics['infidelity'], 1e-7)
        x0 = lift_physical(PauliOperator.single(0, 'X', 2))
        self.assertAlmostEqual(_dense_expectation(evolved.state, x0).real, np.tanh(0.1), delta=2e-3)

    def test_wrong_segment_or_basis(self):
        config = EvolutionConfig(step=0.01, backend=Backend.ENUMERATION)
        with self.assertRaises(ContractViolation):
            pite_step(EvolutionState(RbmoState.identity(2), segment=Segment.C2_SR), _field(2), config)
        state = ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
        with self.assertRaises(BasisMismatchError):
            pite_step(EvolutionState(state), _field(2), config)


class SrTests(TestCase):
    """Test stochastic reconfiguration"""

    def test_single_spin_thermal_field(self):
        """Test <X> = tanh(beta h) for one spin in a transverse field"""
        tau0 = 0.1
        v = 1j * np.arccos(np.tanh(tau0))
        params = RbmoParams(a=np.zeros(1), a_aux=np.zeros(1), b=np.zeros(1),
                            W=np.array([[v / 2]]), W_aux=np.array([[-v / 2]]))
        evolution_state = EvolutionState(RbmoState.from_params(params), beta=2 * tau0, segment=Segment.C2_SR)
        hamiltonian = _field(1)
        x = lift_physical(PauliOperator.single(0, 'X', 1))
        self.assertAlmostEqual(_dense_expectation(evolution_state.state, x).real, np.tanh(0.2))

        config = EvolutionConfig(step=0.01, integrator=Integrator.RK2, backend=Backend.ENUMERATION)
        for _ in range(40):
            evolution_state = sr_step(evolution_state, hamiltonian, config)

        self.assertAlmostEqual(evolution_state.beta, 1.0)
        self.assertEqual(evolution_state.step_index, 40)
        self.assertAlmostEqual(_dense_expectation(evolution_state.state, x).real, np.tanh(1.0), delta=2e-3)
        self.assertIsNotNone(evolution_state.last_batch)

    def test_wrong_segment(self):
        config = EvolutionConfig(step=0.01, backend=Backend.ENUMERATION)
        with self.assertRaises(ContractViolation):
            sr_step(EvolutionState(RbmoState.identity(1)), _field(1), config)


class TvmcTests(TestCase):
    """Test real-time steps"""

    def test_infinite_temperature_is_stationary(self):
        state = ArnnoXState.identity(2, hidden_size=3, rng=np.random.default_rng(0))
        evolution_state = EvolutionState(state, segment=Segment.C3_TVMC)
        op = rotate_auxiliary(thermofield_hamiltonian(build_tfim(build_lattice('chain', 2, 'open'), 1.0, 0.5)))
        config = EvolutionConfig(step=0.05, backend=Backend.ENUMERATION)

        evolved = tvmc_step(evolution_state, op, config)
        self.assertAlmostEqual(evolved.t, 0.05)
        self.assertEqual(evolved.beta, 0.0)
        np.testing.assert_allclose(evolved.state.parameters, state.parameters, atol=1e-8)

    @tag('slow')
    def test_energy_is_conserved(self):
        """Test that the generator expectation stays put under a time-independent quench"""
        op = thermofield_hamiltonian(build_tfim(build_lattice('chain', 4, 'open'), J=1.0, h_T=0.5))
        evolution_state = EvolutionState(_random_rbmo(n_sites=4, scale=0.2, seed=3), beta=0.2,
                                         segment=Segment.C3_TVMC)
        config = EvolutionConfig(step=0.01, integrator=Integrator.RK4, svd_atol=1e-10,
                                 backend=Backend.ENUMERATION)
        initial = _dense_expectation(evolution_state.state, op).real
        for _ in range(100):
            evolution_state = tvmc_step(evolution_state, op, config)

        self.assertAlmostEqual(evolution_state.t, 1.0)
        drift = abs(_dense_expectation(evolution_state.state, op).real - initial)
        self.assertLessEqual(drift, 1e-3 * max(abs(initial), 1.0))

    def test_unrotated_operator_is_rejected(self):
        state = ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
        op = thermofield_hamiltonian(_field(2))
        config = EvolutionConfig(step=0.05, backend=Backend.ENUMERATION)
        with self.assertRaises(BasisMismatchError):
            tvmc_step(EvolutionState(state, segment=Segment.C3_TVMC), op, config)


class EvolutionStateTests(TestCase):
    """Test contour bookkeeping"""

    def test_advance_moves_forward_only(self):
        evolution_state = EvolutionState(RbmoState.identity(1))
        moved = evolution_state.advance(evolution_state.state, d_beta=0.1)
        self.assertEqual((moved.beta, moved.step_index), (0.1, 1))
        with self.assertRaises(ContractViolation):
            evolution_state.advance(evolution_state.state, dt=-0.1)

    def test_segment_switch_resets_guard(self):
        evolution_state = EvolutionState(RbmoState.identity(1), energy_magnitude=3.0, last_batch=object())
        switched = evolution_state.with_segment('c2_sr')
        self.assertEqual(switched.segment, Segment.C2_SR)
        self.assertIsNone(switched.energy_magnitude)
        self.assertIsNone(switched.last_batch)

    def test_config_validation(self):
        with self.assertRaises(ContractViolation):
            EvolutionConfig(step=0.0)
        self.assertEqual(EvolutionConfig(step=0.1).to_dict()['integrator'], 'rk2')
