"""
Shared TDVP step: Runge-Kutta over the parameter velocity, energy guard,
retries and the measurement batch of the accepted state.
"""
from typing import Dict, Optional
import logging

import numpy as np

from apps.ansatz.arnno import ArnnoState
from apps.ansatz.base import VariationalState
from apps.sampling.batch import SampleBatch
from apps.sampling.direct import direct_sample
from apps.sampling.enumeration import enumerate_all
from apps.sampling.metropolis import metropolis_sample
from apps.thermofield.algebra import ThermofieldOperator
from ntfsim.exceptions import ContractViolation, StepRejected

from .integrators import integrate_step
from .local_energy import check_operator_basis
from .qgt import QgtForces, estimate_qgt_forces, parameter_velocity
from .retry import RetryPolicy, run_with_retry
from .state import Backend, EvolutionConfig, EvolutionState

logger = logging.getLogger(__name__)


def draw_born_batch(state: VariationalState, config: EvolutionConfig,
                    rng: Optional[np.random.Generator]) -> SampleBatch:
    if config.backend == Backend.ENUMERATION:
        return enumerate_all(state)
    if rng is None:
        raise ContractViolation('the sampled backend needs a random generator')
    sampler = config.sampler
    if isinstance(state, ArnnoState) and sampler.direct:
        return direct_sample(state, config.samples_per_step, rng)
    return metropolis_sample(
        state,
        n_chains=sampler.n_chains,
        n_samples=config.samples_per_step,
        sweep_factor=sampler.sweep_factor,
        rng=rng,
        burn_in=sampler.burn_in,
        workers=sampler.workers,
    )


def _attempt(evolution_state: EvolutionState, op: ThermofieldOperator, config: EvolutionConfig,
             rng: Optional[np.random.Generator], step: float, real_time: bool) -> EvolutionState:
    base = evolution_state.state
    # sampled stages always draw a fresh batch
    reusable = evolution_state.last_batch if config.backend == Backend.ENUMERATION else None
    stage_diagnostics: Dict[str, list] = {'force_snr': [], 'min_kept': [], 'n_kept': []}
    first: Dict[str, QgtForces] = {}

    def velocity(theta: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(theta)):
            raise StepRejected('non-finite parameters inside a Runge-Kutta stage')
        at_base = np.array_equal(theta, base.parameters)
        current = base if at_base else base.with_parameters(theta)
        batch = reusable if at_base else None
        if batch is None:
            batch = draw_born_batch(current, config, rng)
        qgt = estimate_qgt_forces(current, batch, op)
        first.setdefault('qgt', qgt)
        solved = parameter_velocity(qgt, current.holomorphic, real_time, config.svd_atol)
        stage_diagnostics['force_snr'].append(qgt.diagnostics['force_snr'])
        stage_diagnostics['n_kept'].append(solved.n_kept)
        if solved.min_kept is not None:
            stage_diagnostics['min_kept'].append(solved.min_kept)
        return solved.velocity

    theta = integrate_step(np.array(base.parameters), step, velocity, config.integrator)
    if not np.all(np.isfinite(theta)):
        raise StepRejected('step produced non-finite parameters')
    new_state = base.with_parameters(theta)

    batch = draw_born_batch(new_state, config, rng)
    measured = estimate_qgt_forces(new_state, batch, op)
    magnitude = measured.diagnostics['mean_abs_local_energy']
    previous = evolution_state.energy_magnitude
    if previous is None:
        previous = first['qgt'].diagnostics['mean_abs_local_energy']
    limit = config.energy_jump_factor * max(previous, config.energy_floor)
    if not np.isfinite(magnitude) or magnitude > limit:
        raise StepRejected(
            f'mean |E_loc| jumped from {previous:.4g} to {magnitude:.4g}',
            {'previous_energy_magnitude': previous, 'energy_magnitude': magnitude},
        )

    diagnostics = {
        'step_size': step,
        'energy': [measured.E_mean.real, measured.E_mean.imag],
        'force_snr': float(np.min(stage_diagnostics['force_snr'])),
        'min_kept_singular_value': min(stage_diagnostics['min_kept']) if stage_diagnostics['min_kept'] else None,
        'n_kept': int(min(stage_diagnostics['n_kept'])),
        **batch.summary(),
    }
    advance = {'dt': step} if real_time else {'d_beta': 2.0 * step}
    return evolution_state.advance(
        new_state,
        energy_magnitude=magnitude,
        diagnostics=diagnostics,
        last_batch=batch,
        **advance,
    )


def tdvp_step(evolution_state: EvolutionState, op: ThermofieldOperator, config: EvolutionConfig,
              rng: Optional[np.random.Generator], real_time: bool) -> EvolutionState:
    check_operator_basis(evolution_state.state, op)
    policy = RetryPolicy(max_retries=config.max_retries, step_factor=config.retry_step_factor)
    label = 't-VMC step' if real_time else 'SR step'
    result = run_with_retry(
        policy,
        config.step,
        lambda step: _attempt(evolution_state, op, config, rng, step, real_time),
        label=label,
    )
    logger.debug('%s %d: beta=%.4f t=%.4f E=%.6f', label, result.step_index,
                 result.beta, result.t, result.diagnostics['energy'][0])
    return result
