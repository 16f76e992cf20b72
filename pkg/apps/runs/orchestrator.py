"""
Contour Runner - drives a run through C1 (p-ITE), C2 (SR) and C3 (t-VMC)
and the reference oracles, writing series and checkpoints.
"""
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import logging
import time

import numpy as np
import pandas as pd

from apps.ansatz.base import VariationalState
from apps.evolution.pite import pite_step
from apps.evolution.sr import sr_step
from apps.evolution.state import EvolutionConfig, EvolutionState, Segment
from apps.evolution.tdvp import draw_born_batch
from apps.evolution.tvmc import tvmc_step
from apps.lattice.pauli import PauliOperator
from apps.observables.estimators import ObservableSpec, estimate
from apps.observables.suite import standard_observable_suite
from apps.oracles.exact import ed_evolve, ed_thermal, expectation
from apps.oracles.metts import metts_run
from apps.thermofield.algebra import AuxBasis, rotate_auxiliary, thermofield_hamiltonian
from ntfsim.exceptions import EvolutionError, SchemaError

from .checkpoints import Checkpoint, read_checkpoint, write_checkpoint
from .config import RunConfig
from .series import SeriesWriter, TimeSeriesRecord, truncate_series

logger = logging.getLogger(__name__)

_EPS = 1e-12
# step diagnostics copied into series records
_RECORDED_DIAGNOSTICS = (
    'step_size', 'acceptance_rate', 'force_snr', 'min_kept_singular_value', 'n_kept',
    'infidelity', 'iterations',
)

CheckpointCallback = Callable[[Path, Checkpoint], None]


@dataclass
class RunResult:
    kind: str
    series_path: Path
    checkpoint_path: Optional[Path] = None
    beta: float = 0.0
    t: float = 0.0
    n_steps: int = 0
    total_time: float = 0.0
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'series_path': str(self.series_path),
            'checkpoint_path': str(self.checkpoint_path) if self.checkpoint_path else None,
            'beta': self.beta,
            't': self.t,
            'n_steps': self.n_steps,
            'total_time': self.total_time,
            'started_at': self.started_at.isoformat() if self.started_at else None,
            'completed_at': self.completed_at.isoformat() if self.completed_at else None,
            **self.extra,
        }


class ContourRunner:
    """
    Runs one configuration.

    Usage:
        runner = ContourRunner(config, Path('runs/chain8'))
        prepared = runner.run_prepare()
        evolved = runner.run_evolve(prepared.checkpoint_path)
    """

    def __init__(self, config: RunConfig, output_dir: Path,
                 on_checkpoint: Optional[CheckpointCallback] = None):
        self.config = config
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.on_checkpoint = on_checkpoint
        self.lattice = config.lattice.build()

    # helpers

    def _checkpoint(self, evolution_state: EvolutionState, rng: np.random.Generator, name: str) -> Path:
        checkpoint = Checkpoint.from_evolution(evolution_state, rng)
        path = write_checkpoint(checkpoint, self.output_dir / name)
        if self.on_checkpoint:
            self.on_checkpoint(path, checkpoint)
        return path

    def _measure(self, evolution_state: EvolutionState, specs: Sequence[ObservableSpec],
                 sampling: EvolutionConfig, rng: np.random.Generator) -> TimeSeriesRecord:
        state = evolution_state.state
        batch = evolution_state.last_batch
        if batch is None:
            batch = draw_born_batch(state, sampling, rng)
        observables = {}
        for spec in specs:
            result = estimate(state, spec, batch)
            observables[spec.name] = {'mean': result.mean.real, 'stderr': result.stderr}
        energy = None
        if 'energy_per_site' in observables:
            energy = observables['energy_per_site']['mean'] * state.n_sites
        diagnostics = {k: evolution_state.diagnostics[k] for k in _RECORDED_DIAGNOSTICS
                       if k in evolution_state.diagnostics}
        diagnostics.setdefault('acceptance_rate', batch.diagnostics.get('acceptance_rate'))
        return TimeSeriesRecord(
            segment=evolution_state.segment.value,
            beta=evolution_state.beta,
            t=evolution_state.t,
            observables=observables,
            energy=energy,
            diagnostics=diagnostics,
        )

    def _imaginary_segment(self, evolution_state: EvolutionState, hamiltonian: PauliOperator, stepper,
                           seg_config: EvolutionConfig, beta_end: float, writer: SeriesWriter,
                           specs: Sequence[ObservableSpec], rng: np.random.Generator) -> EvolutionState:
        config = self.config
        targets = [b for b in config.checkpoint_betas if evolution_state.beta + _EPS < b <= beta_end]
        label = evolution_state.segment.value
        while beta_end - evolution_state.beta > _EPS:
            limit = targets[0] if targets else beta_end
            step = min(seg_config.step, 0.5 * (limit - evolution_state.beta))
            try:
                evolution_state = stepper(evolution_state, hamiltonian, seg_config.with_step(step), rng)
            except EvolutionError as e:
                path = self._checkpoint(evolution_state, rng, 'last_good')
                logger.error('%s failed at beta=%.4f; last good state in %s', label, evolution_state.beta, path)
                raise EvolutionError(
                    f'{label} failed at beta={evolution_state.beta:.4f}: {e}',
                    {**e.diagnostics, 'checkpoint': str(path)},
                ) from e

            reached = bool(targets) and evolution_state.beta >= targets[0] - _EPS
            done = beta_end - evolution_state.beta <= _EPS
            if reached or done or evolution_state.step_index % config.record_every == 0:
                writer.write(self._measure(evolution_state, specs, config.sr, rng))
            if reached:
                targets.pop(0)
                self._checkpoint(evolution_state, rng, f'beta_{evolution_state.beta:.4f}')
            if evolution_state.step_index % config.checkpoint_every == 0:
                self._checkpoint(evolution_state, rng, 'prepare_latest')
            logger.debug('%s step %d: beta=%.4f', label, evolution_state.step_index, evolution_state.beta)
        return evolution_state

    # runs

    def run_prepare(self, checkpoint_path: Optional[Path] = None) -> RunResult:
        """
        Prepare the thermal state from beta = 0, or resume from a prepare checkpoint.

        A resumed run drops series records past the checkpoint and appends.
        """
        config = self.config
        started = datetime.now()
        t0 = time.time()
        hamiltonian = config.model.hamiltonian(self.lattice)
        specs = standard_observable_suite(self.lattice, hamiltonian, config.pair_mode)
        series_path = self.output_dir / 'prepare.jsonl'
        resume = checkpoint_path is not None
        if resume:
            checkpoint = read_checkpoint(checkpoint_path)
            self._check_compatible(checkpoint.state)
            if checkpoint.segment not in (Segment.C1_PITE, Segment.C2_SR):
                raise SchemaError(f'cannot resume prepare from a {checkpoint.segment.value} checkpoint')
            rng = checkpoint.restore_rng(config.seed)
            evolution_state = checkpoint.evolution_state()
            truncate_series(series_path, evolution_state.beta, evolution_state.t)
        else:
            rng = np.random.default_rng(config.seed)
            state = config.ansatz.build(self.lattice.n_sites, rng)
            segment = Segment.C2_SR if config.skips_pite else Segment.C1_PITE
            evolution_state = EvolutionState(state, segment=segment)

        logger.info('=' * 60)
        logger.info('PREPARE: %s on %d sites, beta %.4f -> %.4f (preset %s)%s',
                    evolution_state.state.architecture.value, self.lattice.n_sites, evolution_state.beta,
                    config.beta_target, config.preset, ' (resumed)' if resume else '')
        logger.info('=' * 60)

        with SeriesWriter(series_path, append=resume) as writer:
            if not resume:
                writer.write(self._measure(evolution_state, specs, config.sr, rng))
            if evolution_state.segment == Segment.C1_PITE:
                pite_end = min(config.pite_until, config.beta_target)
                evolution_state = self._imaginary_segment(
                    evolution_state, hamiltonian, pite_step, config.pite, pite_end, writer, specs, rng,
                )
                logger.info('C1 done at beta=%.4f after %d steps', evolution_state.beta, evolution_state.step_index)
                evolution_state = evolution_state.with_segment(Segment.C2_SR)
            evolution_state = self._imaginary_segment(
                evolution_state, hamiltonian, sr_step, config.sr, config.beta_target, writer, specs, rng,
            )

        checkpoint_path = self._checkpoint(evolution_state, rng, 'prepare_final')
        logger.info('PREPARE finished: beta=%.4f, %d steps, %.1fs',
                    evolution_state.beta, evolution_state.step_index, time.time() - t0)
        return RunResult(
            kind='prepare',
            series_path=series_path,
            checkpoint_path=checkpoint_path,
            beta=evolution_state.beta,
            n_steps=evolution_state.step_index,
            total_time=time.time() - t0,
            started_at=started,
            completed_at=datetime.now(),
        )

    def _check_compatible(self, state: VariationalState):
        expected = self.config.ansatz.descriptor_architecture
        if state.architecture != expected or state.n_sites != self.lattice.n_sites:
            raise SchemaError(
                f'checkpoint holds {state.architecture.value} on {state.n_sites} sites, '
                f'config expects {expected.value} on {self.lattice.n_sites}'
            )

    def run_evolve(self, checkpoint_path: Path) -> RunResult:
        config = self.config
        if config.quench is None:
            raise SchemaError('evolve needs a quench model')
        started = datetime.now()
        t0 = time.time()
        checkpoint = read_checkpoint(checkpoint_path)
        self._check_compatible(checkpoint.state)
        rng = checkpoint.restore_rng(config.seed)

        hamiltonian = config.quench.hamiltonian(self.lattice)
        thermofield_op = thermofield_hamiltonian(hamiltonian)
        if checkpoint.state.basis == AuxBasis.X:
            thermofield_op = rotate_auxiliary(thermofield_op)
        specs = standard_observable_suite(self.lattice, hamiltonian, config.pair_mode)

        resume = checkpoint.segment == Segment.C3_TVMC
        evolution_state = checkpoint.evolution_state()
        if resume:
            truncate_series(self.output_dir / 'evolve.jsonl', evolution_state.beta, evolution_state.t)
        else:
            evolution_state = evolution_state.with_segment(Segment.C3_TVMC)

        logger.info('=' * 60)
        logger.info('EVOLVE: beta=%.4f, t %.4f -> %.4f%s', evolution_state.beta, evolution_state.t,
                    config.t_target, ' (resumed)' if resume else '')
        logger.info('=' * 60)

        series_path = self.output_dir / 'evolve.jsonl'
        first_step = evolution_state.step_index
        with SeriesWriter(series_path, append=resume) as writer:
            if not resume:
                writer.write(self._measure(evolution_state, specs, config.tvmc, rng))
            while config.t_target - evolution_state.t > _EPS:
                step = min(config.tvmc.step, config.t_target - evolution_state.t)
                try:
                    evolution_state = tvmc_step(evolution_state, thermofield_op, config.tvmc.with_step(step), rng)
                except EvolutionError as e:
                    path = self._checkpoint(evolution_state, rng, 'last_good')
                    raise EvolutionError(
                        f'C3 failed at t={evolution_state.t:.4f}: {e}',
                        {**e.diagnostics, 'checkpoint': str(path)},
                    ) from e
                done = config.t_target - evolution_state.t <= _EPS
                if done or evolution_state.step_index % config.record_every == 0:
                    writer.write(self._measure(evolution_state, specs, config.tvmc, rng))
                if evolution_state.step_index % config.checkpoint_every == 0:
                    self._checkpoint(evolution_state, rng, 'evolve_latest')

        checkpoint_path = self._checkpoint(evolution_state, rng, 'evolve_final')
        logger.info('EVOLVE finished: t=%.4f, %d steps, %.1fs', evolution_state.t,
                    evolution_state.step_index - first_step, time.time() - t0)
        return RunResult(
            kind='evolve',
            series_path=series_path,
            checkpoint_path=checkpoint_path,
            beta=evolution_state.beta,
            t=evolution_state.t,
            n_steps=evolution_state.step_index - first_step,
            total_time=time.time() - t0,
            started_at=started,
            completed_at=datetime.now(),
        )

    def run_ed(self) -> RunResult:
        """Exact thermal rows on the checkpoint grid, then the exact quench when t_target > 0."""
        config = self.config
        started = datetime.now()
        t0 = time.time()
        hamiltonian = config.model.hamiltonian(self.lattice)
        specs = standard_observable_suite(self.lattice, hamiltonian, config.pair_mode)
        betas = sorted({0.0, *config.checkpoint_betas, config.beta_target})

        series_path = self.output_dir / 'ed.jsonl'
        with SeriesWriter(series_path) as writer:
            rho = None
            for beta in betas:
                rho = ed_thermal(hamiltonian, beta)
                observables = {s.name: {'mean': expectation(rho, s.operator).real, 'stderr': 0.0} for s in specs}
                writer.write(TimeSeriesRecord(
                    segment='ed_thermal', beta=beta, t=0.0, observables=observables,
                    energy=expectation(rho, hamiltonian).real,
                ))
            n_rows = len(betas)
            if config.t_target > 0 and config.quench is not None:
                quench = config.quench.hamiltonian(self.lattice)
                quench_specs = standard_observable_suite(self.lattice, quench, config.pair_mode)
                dt = config.tvmc.step
                t_grid = np.linspace(0.0, config.t_target, int(round(config.t_target / dt)) + 1)
                operators = {s.name: s.operator for s in quench_specs}
                operators['_energy'] = quench
                for row in ed_evolve(rho, quench, t_grid, operators):
                    energy = row.pop('_energy')
                    t = row.pop('t')
                    writer.write(TimeSeriesRecord(
                        segment='ed_evolve', beta=config.beta_target, t=t,
                        observables={name: {'mean': value, 'stderr': 0.0} for name, value in row.items()},
                        energy=energy,
                    ))
                n_rows += len(t_grid)

        logger.info('ED: %d rows written to %s', n_rows, series_path)
        return RunResult(
            kind='ed',
            series_path=series_path,
            beta=config.beta_target,
            t=config.t_target,
            n_steps=n_rows,
            total_time=time.time() - t0,
            started_at=started,
            completed_at=datetime.now(),
        )

    def run_metts(self) -> RunResult:
        config = self.config
        started = datetime.now()
        t0 = time.time()
        rng = np.random.default_rng(config.seed)
        hamiltonian = config.model.hamiltonian(self.lattice)
        specs = standard_observable_suite(self.lattice, hamiltonian, config.pair_mode)
        result = metts_run(
            hamiltonian, config.beta_target, specs, config.metts_samples, rng,
            n_chains=config.metts_chains, workers=config.sr.sampler.workers, discard=config.metts_discard,
        )

        series_path = self.output_dir / 'metts.jsonl'
        observables = {name: {'mean': result.mean(name), 'stderr': result.stderr(name)} for name in result.values}
        with SeriesWriter(series_path) as writer:
            writer.write(TimeSeriesRecord(
                segment='metts', beta=config.beta_target, t=0.0, observables=observables,
                energy=observables['energy_per_site']['mean'] * self.lattice.n_sites,
                diagnostics=result.diagnostics,
            ))
        samples_path = self.output_dir / 'metts_samples.csv'
        pd.DataFrame(result.values).to_csv(samples_path, index=False)

        logger.info('METTS: %d samples at beta=%.4f', result.n_samples, config.beta_target)
        return RunResult(
            kind='metts',
            series_path=series_path,
            beta=config.beta_target,
            n_steps=result.n_samples,
            total_time=time.time() - t0,
            started_at=started,
            completed_at=datetime.now(),
            extra={'samples_path': str(samples_path)},
        )
