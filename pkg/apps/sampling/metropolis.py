"""
Metropolis-Hastings on |psi|^2 over doubled configurations.

Each proposal flips a physical spin, an auxiliary spin, or both spins of one
pair. Pair flips keep chains on the identity support, where single flips
always land on zero amplitudes. One sweep is N proposals per chain.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple
import logging

import numpy as np

from apps.ansatz.base import VariationalState
from apps.thermofield.algebra import AuxBasis
from ntfsim.exceptions import ContractViolation, SeedingError

from .batch import SampleBatch, SampleSource

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 100
DEFAULT_CHAINS = 32
# physical flip, auxiliary flip, joint pair flip
DEFAULT_MOVE_PROBABILITIES = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


def identity_support_seeds(n_chains: int, n_sites: int, basis: AuxBasis,
                           rng: np.random.Generator) -> np.ndarray:
    """Uniform draws from the support of the identity state in the given basis."""
    physical = 1 - 2 * rng.integers(0, 2, size=(n_chains, n_sites))
    if AuxBasis(basis) == AuxBasis.Z:
        auxiliary = physical.copy()
    else:
        auxiliary = 1 - 2 * rng.integers(0, 2, size=(n_chains, n_sites))
    return np.concatenate([physical, auxiliary], axis=1).astype(np.int8)


def propose(current: np.ndarray, rng: np.random.Generator,
            move_probabilities: Sequence[float] = DEFAULT_MOVE_PROBABILITIES) -> np.ndarray:
    n_chains, width = current.shape
    n_sites = width // 2
    moves = rng.choice(3, size=n_chains, p=move_probabilities)
    sites = rng.integers(0, n_sites, size=n_chains)
    rows = np.arange(n_chains)
    proposal = current.copy()
    flip_physical = moves != 1
    flip_auxiliary = moves != 0
    proposal[rows[flip_physical], sites[flip_physical]] *= -1
    proposal[rows[flip_auxiliary], n_sites + sites[flip_auxiliary]] *= -1
    return proposal


def acceptance_log_ratio(new_log: np.ndarray, old_log: np.ndarray) -> np.ndarray:
    """ln |psi(x')/psi(x)|^2; a zero-amplitude proposal gives -inf."""
    with np.errstate(invalid='ignore'):
        ratio = 2.0 * (new_log.real - old_log.real)
    return np.where(np.isneginf(new_log.real), -np.inf, ratio)


def _run_chains(state: VariationalState, seeds: np.ndarray, chain_length: int,
                sweep_factor: int, burn_in: int, rng: np.random.Generator,
                move_probabilities: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_chains = seeds.shape[0]
    current = seeds.copy()
    current_log = state.log_amplitude(current)
    if np.any(np.isneginf(current_log.real)):
        raise SeedingError('chain seed has zero amplitude',
                           {'zero_seeds': int(np.isneginf(current_log.real).sum())})

    samples = np.empty((n_chains, chain_length, seeds.shape[1]), dtype=np.int8)
    log_samples = np.empty((n_chains, chain_length), dtype=np.complex128)
    accepted = np.zeros(n_chains)
    proposals = 0

    def sweep(n_sweeps: int):
        nonlocal current, current_log, proposals
        for _ in range(n_sweeps * state.n_sites):
            proposal = propose(current, rng, move_probabilities)
            proposal_log = state.log_amplitude(proposal)
            log_ratio = acceptance_log_ratio(proposal_log, current_log)
            accept = np.log(rng.random(n_chains)) < log_ratio
            current[accept] = proposal[accept]
            current_log[accept] = proposal_log[accept]
            accepted[:] += accept
            proposals += 1

    sweep(burn_in)
    accepted[:] = 0
    proposals = 0
    for t in range(chain_length):
        sweep(sweep_factor)
        samples[:, t] = current
        log_samples[:, t] = current_log
    rates = accepted / max(proposals, 1)
    return samples, log_samples, rates


def metropolis_sample(
    state: VariationalState,
    n_chains: int,
    n_samples: int,
    sweep_factor: int,
    rng: np.random.Generator,
    burn_in: int = DEFAULT_BURN_IN,
    workers: int = 1,
    move_probabilities: Sequence[float] = DEFAULT_MOVE_PROBABILITIES,
    seeds: np.ndarray = None,
) -> SampleBatch:
    """
    Markov batch of n_chains * (n_samples // n_chains) configurations.

    Chains are split over `workers` groups, each with its own generator drawn
    from rng; groups are concatenated in order.
    """
    if n_chains < 1 or n_samples < n_chains or sweep_factor < 1:
        raise ContractViolation(
            f'need n_samples >= n_chains >= 1 and sweep_factor >= 1 '
            f'(got {n_samples}, {n_chains}, {sweep_factor})'
        )
    chain_length = n_samples // n_chains
    if seeds is None:
        seeds = identity_support_seeds(n_chains, state.n_sites, state.basis, rng)

    workers = max(1, min(int(workers), n_chains))
    groups: List[np.ndarray] = np.array_split(np.arange(n_chains), workers)
    child_rngs = [np.random.default_rng(s) for s in rng.integers(0, 2 ** 63 - 1, size=workers)]
    # one state per worker; a torch-backed state is not safe to share across threads
    states = [state] if workers == 1 else [state.with_parameters(state.parameters) for _ in range(workers)]

    def run(k: int):
        return _run_chains(states[k], seeds[groups[k]], chain_length, sweep_factor,
                           burn_in, child_rngs[k], move_probabilities)

    if workers == 1:
        results = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(workers)))

    samples = np.concatenate([r[0] for r in results])
    log_samples = np.concatenate([r[1] for r in results])
    rates = np.concatenate([r[2] for r in results])

    stuck = int((rates == 0).sum())
    if stuck:
        logger.warning('%d of %d Metropolis chains rejected every move (mean acceptance %.3f)',
                       stuck, n_chains, rates.mean())
    logger.debug('Metropolis: %d chains x %d samples, acceptance %.3f',
                 n_chains, chain_length, rates.mean())

    return SampleBatch(
        configs=samples.reshape(n_chains * chain_length, -1),
        basis=state.basis,
        source=SampleSource.BORN_METROPOLIS,
        log_amplitudes=log_samples.reshape(-1),
        n_chains=n_chains,
        diagnostics={
            'acceptance_rate': float(rates.mean()),
            'stuck_chains': stuck,
        },
    )
