"""
Quantum geometric tensor, forces and the regularized TDVP solve.

    G_kk' = <O_k* O_k'> - <O_k*><O_k'>
    F_k   = <O_k* E_loc> - <O_k*><E_loc>

Averages are taken with the batch weights: uniform for Born samples, the
normalized |psi|^2 for enumeration and self-normalized |psi|^2 / q for prior
batches. Zero-amplitude configurations carry no weight and are dropped.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple
import logging

import numpy as np
from scipy import linalg

from apps.ansatz.base import VariationalState
from apps.sampling.batch import SampleBatch, SampleSource
from apps.thermofield.algebra import ThermofieldOperator
from ntfsim.exceptions import ContractViolation

from .local_energy import local_values

logger = logging.getLogger(__name__)

# relative tolerance on negative QGT eigenvalues before a warning
PSD_TOLERANCE = 1e-10


@dataclass
class QgtForces:
    G: np.ndarray
    F: np.ndarray
    E_mean: complex
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_parameters(self) -> int:
        return self.F.size

    def to_dict(self) -> Dict[str, Any]:
        return {
            'energy': [self.E_mean.real, self.E_mean.imag],
            **self.diagnostics,
        }


@dataclass
class SolveResult:
    velocity: np.ndarray
    n_kept: int
    min_kept: Optional[float]
    min_eigenvalue: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n_kept': self.n_kept,
            'min_kept_singular_value': self.min_kept,
            'min_eigenvalue': self.min_eigenvalue,
        }


def support_weights(state: VariationalState, batch: SampleBatch) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(configs, log_psi, normalized weights) restricted to nonzero amplitudes."""
    if batch.basis != state.basis:
        raise ContractViolation('batch and state live in different auxiliary bases')
    log_psi = batch.log_amplitudes
    if log_psi is None or batch.source == SampleSource.PRIOR_Q:
        log_psi = state.log_amplitude(batch.configs)
    keep = np.isfinite(log_psi.real)

    if batch.source == SampleSource.PRIOR_Q:
        log_w = 2.0 * log_psi.real[keep] + np.log(batch.weights[keep])
        weights = np.exp(log_w - log_w.max()) if log_w.size else log_w
    elif batch.source == SampleSource.ENUMERATION:
        keep &= batch.weights > 0
        weights = batch.weights[keep]
    else:
        weights = np.ones(int(keep.sum()))
    if weights.size == 0:
        raise ContractViolation('batch holds no configuration with nonzero amplitude')
    return batch.configs[keep], log_psi[keep], weights / weights.sum()


def estimate_qgt_forces(state: VariationalState, batch: SampleBatch, op: ThermofieldOperator) -> QgtForces:
    configs, log_psi, w = support_weights(state, batch)
    e_loc = local_values(state, configs, op, log_psi=log_psi)
    O = state.log_derivatives(configs)

    e_mean = complex(w @ e_loc)
    dO = O - (w @ O)[None, :]
    dE = e_loc - e_mean
    G = (dO.conj().T * w) @ dO
    F = (dO.conj().T * w) @ dE
    G = 0.5 * (G + G.conj().T)

    # per-component force noise from the spread of O_k* dE
    n_eff = 1.0 / float(w @ w)
    contributions = dO.conj() * dE[:, None]
    variance = w @ np.abs(contributions - F[None, :]) ** 2
    noise = float(np.sqrt(variance.sum() / n_eff))
    force_norm = float(np.linalg.norm(F))

    n_params = F.size
    if n_eff < n_params:
        logger.debug('QGT from %.0f effective samples for %d parameters', n_eff, n_params)
    diagnostics = {
        'n_samples': int(len(configs)),
        'effective_samples': n_eff,
        'force_norm': force_norm,
        'force_snr': force_norm / noise if noise > 0 else (np.inf if force_norm > 0 else 0.0),
        'energy_variance': float(w @ np.abs(dE) ** 2),
        'mean_abs_local_energy': float(w @ np.abs(e_loc)),
        'rank_deficient_sampling': bool(n_eff < n_params),
    }
    return QgtForces(G=G, F=F, E_mean=e_mean, diagnostics=diagnostics)


def solve_regularized(G: np.ndarray, rhs: np.ndarray, svd_atol: float) -> SolveResult:
    """
    Pseudo-inverse solve of G x = rhs keeping eigenvalues above svd_atol.

    G is Hermitian PSD, so its eigenvalues are its singular values; the cutoff
    is absolute.
    """
    if not svd_atol > 0:
        raise ContractViolation(f'svd_atol must be positive, got {svd_atol}')
    G = np.asarray(G)
    rhs = np.asarray(rhs)
    if G.size == 0:
        return SolveResult(np.zeros_like(rhs), 0, None, 0.0)
    eigenvalues, vectors = linalg.eigh(G)
    min_eig = float(eigenvalues[0])
    scale = max(abs(float(eigenvalues[-1])), 1.0)
    if min_eig < -PSD_TOLERANCE * scale * G.shape[0]:
        logger.warning('QGT has a negative eigenvalue %.3e', min_eig)

    kept = eigenvalues > svd_atol
    n_kept = int(kept.sum())
    if n_kept == 0:
        logger.warning('every QGT eigenvalue fell below %.1e; zero velocity', svd_atol)
        return SolveResult(np.zeros_like(rhs, dtype=np.result_type(G, rhs)), 0, None, min_eig)
    V = vectors[:, kept]
    velocity = V @ ((V.conj().T @ rhs) / eigenvalues[kept])
    return SolveResult(velocity, n_kept, float(eigenvalues[kept].min()), min_eig)


def parameter_velocity(qgt: QgtForces, holomorphic: bool, real_time: bool, svd_atol: float) -> SolveResult:
    """
    theta-dot for the TDVP flow.

    Holomorphic states solve G x = -F (imaginary) or G x = -iF (real time).
    Real parameters project onto Re G: Re G x = -Re F or Re G x = Im F.
    """
    if holomorphic:
        rhs = -1j * qgt.F if real_time else -qgt.F
        return solve_regularized(qgt.G, rhs, svd_atol)
    rhs = qgt.F.imag if real_time else -qgt.F.real
    result = solve_regularized(qgt.G.real, rhs, svd_atol)
    result.velocity = np.real(result.velocity)
    return result
