"""
C1 - projected imaginary-time evolution.

Each step fits psi_eta to phi = Pi psi_theta, Pi = exp(-tau H (x) 1), by
minimizing the infidelity under samples S ~ q with importance factors
r(S) = 1 / q(S):

    F = |c|^2 / (N_psi N_phi),  c = sum r psi* phi,
    N_psi = sum r |psi|^2,      N_phi = sum r |phi|^2

Zero-amplitude configurations of psi_theta stay in the estimator, which is
what lets the fit leave the identity support.
"""
from math import factorial
from typing import Any, Callable, Dict, List, Optional, Tuple
import logging

import numpy as np

from apps.ansatz.base import VariationalState, exp_scaled, max_finite_real
from apps.lattice.pauli import PauliOperator
from apps.sampling.prior import PriorConfig, sample_prior
from apps.thermofield.algebra import AuxBasis, ThermofieldOperator, doubled_configurations, lift_physical
from ntfsim.exceptions import BasisMismatchError, ContractViolation, PiteConvergenceError

from .state import Backend, EvolutionConfig, EvolutionState, PiteSettings, Segment

logger = logging.getLogger(__name__)

Amplitudes = Callable[[np.ndarray], np.ndarray]


def _apply_power(op: ThermofieldOperator, configs: np.ndarray, amplitudes: Amplitudes, power: int) -> np.ndarray:
    if power == 0:
        return amplitudes(configs)
    batch, width = configs.shape
    conn, amps = op.connected(configs)
    if conn.shape[1] == 0:
        return np.zeros(batch, dtype=np.complex128)
    inner = _apply_power(op, conn.reshape(-1, width), amplitudes, power - 1).reshape(batch, -1)
    return (amps * inner).sum(axis=1)


def _taylor_terms(op: ThermofieldOperator, configs: np.ndarray, amplitudes: Amplitudes, order: int) -> List[np.ndarray]:
    """[(H^k psi)(S) for k = 0..order] through nested row expansions."""
    return [_apply_power(op, configs, amplitudes, k) for k in range(order + 1)]


def propagated_amplitudes(state: VariationalState, op: ThermofieldOperator, configs: np.ndarray,
                          tau: float, order: int, log_scale: float) -> np.ndarray:
    """phi(S) = sum_k (-tau)^k / k! (H^k psi)(S), scaled by exp(-log_scale)."""
    if order < 0:
        raise ContractViolation(f'propagator order must be >= 0, got {order}')

    def amplitudes(c: np.ndarray) -> np.ndarray:
        return exp_scaled(state.log_amplitude(c), log_scale)

    terms = _taylor_terms(op, configs, amplitudes, order)
    return sum(((-tau) ** k / factorial(k)) * term for k, term in enumerate(terms))


def estimate_fidelity(psi: np.ndarray, phi: np.ndarray, weights: np.ndarray) -> float:
    """Importance-sampled |<phi|psi>|^2 / (<phi|phi><psi|psi>)."""
    c = np.sum(weights * psi.conj() * phi)
    n_psi = np.sum(weights * np.abs(psi) ** 2)
    n_phi = np.sum(weights * np.abs(phi) ** 2)
    if n_psi <= 0 or n_phi <= 0:
        return 0.0
    return float(np.abs(c) ** 2 / (n_psi * n_phi))


def _fidelity_and_gradient(state: VariationalState, configs: np.ndarray, weights: np.ndarray,
                           phi: np.ndarray, n_phi: float, log_scale: float) -> Tuple[float, np.ndarray]:
    psi, d_psi = state.amplitude_derivatives(configs, log_scale)
    c = np.sum(weights * psi.conj() * phi)
    n_psi = float(np.sum(weights * np.abs(psi) ** 2))
    if n_psi <= 0:
        raise PiteConvergenceError('trial state vanishes on every sample')
    fidelity = float(np.abs(c) ** 2 / (n_psi * n_phi))
    u = (d_psi.conj() * (weights * phi)[:, None]).sum(axis=0)
    v = (d_psi.conj() * (weights * psi)[:, None]).sum(axis=0)
    # dF / d eta*
    g = 2.0 * (np.conj(c) * u / (n_psi * n_phi) - fidelity * v / n_psi)
    grad = -g if state.holomorphic else -np.real(g)
    return fidelity, grad


def optimize_infidelity(state: VariationalState, configs: np.ndarray, weights: np.ndarray,
                        phi: np.ndarray, settings: PiteSettings, log_scale: float) -> Tuple[VariationalState, Dict[str, Any]]:
    """Momentum gradient descent from eta = theta until 1 - F drops below the threshold."""
    weights = weights / weights.mean()
    n_phi = float(np.sum(weights * np.abs(phi) ** 2))
    if n_phi <= 0:
        raise PiteConvergenceError('propagated state vanishes on every sample')

    eta = np.array(state.parameters)
    velocity = np.zeros_like(eta)
    trial = state
    infidelity, grad_norm = 1.0, np.inf
    for iteration in range(settings.max_iterations + 1):
        fidelity, grad = _fidelity_and_gradient(trial, configs, weights, phi, n_phi, log_scale)
        infidelity = 1.0 - fidelity
        grad_norm = float(np.linalg.norm(grad))
        if infidelity < settings.infidelity_threshold:
            return trial, {
                'infidelity': infidelity,
                'iterations': iteration,
                'gradient_norm': grad_norm,
            }
        if iteration == settings.max_iterations:
            break
        velocity = settings.momentum * velocity - settings.learning_rate * grad
        eta = eta + velocity
        if not np.all(np.isfinite(eta)):
            break
        trial = state.with_parameters(eta)
        logger.debug('p-ITE iteration %d: infidelity %.3e, |grad| %.3e', iteration, infidelity, grad_norm)

    raise PiteConvergenceError(
        f'infidelity {infidelity:.3e} above {settings.infidelity_threshold:.1e} '
        f'after {settings.max_iterations} iterations',
        {'infidelity': infidelity, 'gradient_norm': grad_norm, 'iterations': settings.max_iterations},
    )


def prior_batch(n_sites: int, config: EvolutionConfig,
                rng: Optional[np.random.Generator]) -> Tuple[np.ndarray, np.ndarray]:
    """(configs, importance factors); the enumeration backend uses every configuration once."""
    if config.backend == Backend.ENUMERATION:
        configs = doubled_configurations(n_sites)
        return configs, np.ones(len(configs))
    if rng is None:
        raise ContractViolation('the sampled backend needs a random generator')
    batch = sample_prior(PriorConfig(n_sites, config.pite.kernel_base), config.pite.n_samples, rng)
    return batch.configs, batch.weights


def pite_step(evolution_state: EvolutionState, hamiltonian: PauliOperator, config: EvolutionConfig,
              rng: Optional[np.random.Generator] = None) -> EvolutionState:
    if evolution_state.segment != Segment.C1_PITE:
        raise ContractViolation(f'pite_step needs segment c1_pite, got {evolution_state.segment.value}')
    state = evolution_state.state
    if state.basis != AuxBasis.Z:
        raise BasisMismatchError('p-ITE runs in the auxiliary Z basis')

    settings = config.pite
    tau = config.step
    op = lift_physical(hamiltonian)
    configs, weights = prior_batch(state.n_sites, config, rng)
    log_scale = max_finite_real(state.log_amplitude(configs))
    phi = propagated_amplitudes(state, op, configs, tau, settings.propagator_order, log_scale)

    new_state, diagnostics = optimize_infidelity(state, configs, weights, phi, settings, log_scale)
    diagnostics.update({'step_size': tau, 'n_samples': int(len(configs))})
    logger.debug('p-ITE step %d: beta %.4f, infidelity %.3e in %d iterations',
                 evolution_state.step_index + 1, evolution_state.beta + 2.0 * tau,
                 diagnostics['infidelity'], diagnostics['iterations'])
    return evolution_state.advance(
        new_state,
        d_beta=2.0 * tau,
        energy_magnitude=None,
        diagnostics=diagnostics,
        last_batch=None,
    )
