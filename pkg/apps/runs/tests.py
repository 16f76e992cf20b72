"""
Tests for run configuration, persistence, the contour runner and the run API
"""
from pathlib import Path
from unittest.mock import patch
import json
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase, tag
from rest_framework import status
from rest_framework.test import APITestCase

from apps.ansatz.arnno import ArnnoXState
from apps.ansatz.rbmo import RbmoState
from apps.evolution.state import Backend, EvolutionState, Segment
from ntfsim.exceptions import ContractViolation, SchemaError

from .checkpoints import Checkpoint, read_checkpoint, write_checkpoint
from .compare import run_compare
from .config import load_run_config
from .models import SimulationRun
from .orchestrator import ContourRunner
from .series import SeriesWriter, TimeSeriesRecord, export_csv, read_series, truncate_series
from .services import create_run, execute_run


def tiny_config(output_dir='', **extra):
    """Two-site open chain with an exactly enumerated autoregressive state."""
    config = {
        'preset': 'desk',
        'seed': 3,
        'output_dir': output_dir,
        'lattice': {'kind': 'chain', 'extent': 2, 'boundary': 'open'},
        'model': {'J': 1.0, 'h_T': 1.0},
        'quench': {'J': 1.0, 'h_T': 0.5},
        'ansatz': {'architecture': 'arnno_x', 'hidden_size': 2},
        'backend': 'enumeration',
        'segments': {'sr': {'step': 0.025}, 'tvmc': {'step': 0.025}},
        'beta_target': 0.1,
        't_target': 0.05,
        'checkpoint_betas': [0.05],
    }
    config.update(extra)
    return config


def _record(beta, t=0.0, segment='c2_sr', x=0.0, stderr=0.0):
    return TimeSeriesRecord(segment=segment, beta=beta, t=t,
                            observables={'x': {'mean': x, 'stderr': stderr}})


class RunConfigTests(TestCase):
    """Test loading run configurations"""

    def test_preset_fills_defaults(self):
        config = load_run_config(tiny_config())
        self.assertEqual(config.preset, 'desk')
        self.assertEqual(config.sr.step, 0.025)
        self.assertEqual(config.sr.samples_per_step, 8000)
        self.assertEqual(config.sr.backend, Backend.ENUMERATION)
        self.assertEqual(config.pite.pite.infidelity_threshold, 1e-4)
        self.assertEqual(config.checkpoint_betas, (0.05,))
        self.assertTrue(config.skips_pite)

    def test_preset_argument_wins(self):
        config = load_run_config(tiny_config(), preset='paper')
        self.assertEqual(config.preset, 'paper')
        self.assertEqual(config.sr.samples_per_step, 64000)

    def test_full_is_an_alias_of_paper(self):
        config = load_run_config(tiny_config(), preset='full')
        self.assertEqual(config.preset, 'paper')
        self.assertEqual(config.tvmc.samples_per_step, 500000)

    def test_overrides_keep_nested_settings(self):
        config = load_run_config(tiny_config(metts={'n_samples': 50, 'discard': 5}),
                                 overrides={'seed': 11, 'metts': {'n_chains': 2}, 'output_dir': None})
        self.assertEqual(config.seed, 11)
        self.assertEqual((config.metts_samples, config.metts_chains, config.metts_discard), (50, 2, 5))

    def test_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.json'
            path.write_text(json.dumps(tiny_config()))
            self.assertEqual(load_run_config(path).lattice.extent, 2)

    def test_round_trip_through_dict(self):
        config = load_run_config(tiny_config())
        self.assertEqual(load_run_config(config.to_dict()), config)

    def test_schema_errors(self):
        with self.assertRaises(SchemaError):
            load_run_config(tiny_config(), preset='fast')
        with self.assertRaises(SchemaError):
            load_run_config(tiny_config(quench=None))
        with self.assertRaises(SchemaError):
            load_run_config(tiny_config(segments={'sr': {'step': -0.1}}))
        with self.assertRaises(SchemaError) as ctx:
            load_run_config(tiny_config(ansatz={'architecture': 'arnno_x', 'mean_field': True}))
        self.assertIn('errors', ctx.exception.diagnostics)
        with self.assertRaises(SchemaError):
            load_run_config('/nonexistent/run.json')


class CheckpointTests(TestCase):
    """Test checkpoint files"""

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        state = RbmoState.identity(3)
        state = state.with_parameters(state.parameters + 0.1j)
        evolution_state = EvolutionState(state, beta=0.05, segment=Segment.C2_SR, step_index=7,
                                         energy_magnitude=1.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Checkpoint.from_evolution(evolution_state, rng), Path(tmp) / 'beta_0.0500')
            self.assertEqual(path.name, 'beta_0.0500.json')
            self.assertTrue((Path(tmp) / 'beta_0.0500.bin').exists())
            expected_draw = rng.random()

            restored = read_checkpoint(path)
            np.testing.assert_array_equal(restored.state.parameters, state.parameters)
            self.assertEqual(restored.segment, Segment.C2_SR)
            self.assertEqual(restored.step_index, 7)
            self.assertEqual(restored.evolution_state().energy_magnitude, 1.5)
            self.assertEqual(restored.restore_rng().random(), expected_draw)

    def test_real_parameters(self):
        state = ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Checkpoint(state, 0.0, 0.0, Segment.C2_SR, 0), Path(tmp) / 'arnno.json')
            restored = read_checkpoint(path)
        self.assertEqual(restored.state.parameters.dtype, np.float64)
        self.assertIsInstance(restored.state, ArnnoXState)
        self.assertEqual(restored.restore_rng(4).random(), np.random.default_rng(4).random())

    def test_malformed_checkpoints(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Checkpoint(RbmoState.identity(2), 0.0, 0.0, Segment.C1_PITE, 0),
                                    Path(tmp) / 'state')
            payload = json.loads(path.read_text())

            payload['layout_version'] = 99
            path.write_text(json.dumps(payload))
            with self.assertRaises(SchemaError):
                read_checkpoint(path)

            payload['layout_version'] = 1
            payload['parameters']['count'] += 1
            path.write_text(json.dumps(payload))
            with self.assertRaises(SchemaError):
                read_checkpoint(path)

            with self.assertRaises(SchemaError):
                read_checkpoint(Path(tmp) / 'missing.json')


class SeriesTests(TestCase):
    """Test time-series files"""

    def test_writer_rejects_backwards_positions(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'series.jsonl'
            with SeriesWriter(path) as writer:
                writer.write(_record(0.0))
                writer.write(_record(0.1))
                with self.assertRaises(ContractViolation):
                    writer.write(_record(0.05))
            with SeriesWriter(path, append=True) as writer:
                with self.assertRaises(ContractViolation):
                    writer.write(_record(0.1, t=-1.0))
                writer.write(_record(0.1, t=0.5, segment='c3_tvmc'))
            records = read_series(path)
        self.assertEqual([(r.beta, r.t) for r in records], [(0.0, 0.0), (0.1, 0.0), (0.1, 0.5)])

    def test_truncate_drops_records_past_position(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'series.jsonl'
            with SeriesWriter(path) as writer:
                for t in (0.0, 0.1, 0.2, 0.3):
                    writer.write(_record(0.1, t=t, segment='c3_tvmc'))
            self.assertEqual(truncate_series(path, 0.1, 0.1), 2)
            with SeriesWriter(path, append=True) as writer:
                writer.write(_record(0.1, t=0.15, segment='c3_tvmc'))
            records = read_series(path)
            self.assertEqual(truncate_series(Path(tmp) / 'missing.jsonl', 0.0, 0.0), 0)
        self.assertEqual([r.t for r in records], [0.0, 0.1, 0.15])

    def test_malformed_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'series.jsonl'
            path.write_text('{"segment": "c2_sr", "beta": 0.0, "t": 0.0}\nnot json\n')
            with self.assertRaises(SchemaError):
                read_series(path)

    def test_export_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'series.jsonl'
            with SeriesWriter(path) as writer:
                for k, x in enumerate([0.0, 1.0, 2.0, 3.0]):
                    writer.write(_record(0.1 * k, x=x, stderr=0.1))
            frame = export_csv(path, Path(tmp) / 'out' / 'series.csv', smooth_window=2)
            written = pd.read_csv(Path(tmp) / 'out' / 'series.csv')
        self.assertEqual(list(frame['x_smoothed']), [0.0, 0.5, 1.5, 2.5])
        self.assertIn('x_stderr', written.columns)
        self.assertEqual(len(written), 4)


class CompareTests(TestCase):
    """Test series comparison"""

    def _write(self, path, records):
        with SeriesWriter(path) as writer:
            for record in records:
                writer.write(record)
        return path

    def test_interpolated_reference(self):
        with tempfile.TemporaryDirectory() as tmp:
            a = self._write(Path(tmp) / 'a.jsonl', [_record(0.05, x=0.5), _record(0.15, x=1.5)])
            b = self._write(Path(tmp) / 'b.jsonl', [_record(0.0, x=0.0), _record(0.2, x=2.0)])
            report = run_compare(a, b)
            self.assertTrue(report.passed)
            self.assertEqual(report.comparisons[0].n_points, 2)

            c = self._write(Path(tmp) / 'c.jsonl', [_record(0.0, x=0.0), _record(0.2, x=1.0)])
            report = run_compare(a, c)
            self.assertFalse(report.passed)
            self.assertAlmostEqual(report.comparisons[0].max_abs_difference, 0.75)

    def test_statistical_tolerance(self):
        with tempfile.TemporaryDirectory() as tmp:
            a = self._write(Path(tmp) / 'a.jsonl', [_record(0.0, x=0.3, stderr=0.1)])
            b = self._write(Path(tmp) / 'b.jsonl', [_record(0.0, x=0.0)])
            self.assertTrue(run_compare(a, b, n_sigma=3.0).passed)
            self.assertFalse(run_compare(a, b, n_sigma=1.0).passed)

    def test_axes_are_separate(self):
        with tempfile.TemporaryDirectory() as tmp:
            a = self._write(Path(tmp) / 'a.jsonl', [_record(0.1, t=0.0, segment='c3_tvmc', x=1.0),
                                                     _record(0.1, t=0.1, segment='c3_tvmc', x=1.0)])
            b = self._write(Path(tmp) / 'b.jsonl', [_record(0.1, t=0.0, segment='ed_thermal', x=0.0)])
            report = run_compare(a, b)
            self.assertEqual(report.comparisons, [])
            self.assertFalse(report.passed)

    def test_empty_series(self):
        with tempfile.TemporaryDirectory() as tmp:
            a = self._write(Path(tmp) / 'a.jsonl', [_record(0.0)])
            empty = Path(tmp) / 'empty.jsonl'
            empty.write_text('')
            with self.assertRaises(SchemaError):
                run_compare(a, empty)


@tag('slow')
class ContourRunnerTests(TestCase):
    """Test full prepare and evolve runs against exact diagonalization"""

    def test_prepare_evolve_and_ed(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = load_run_config(tiny_config(tmp))
            runner = ContourRunner(config, Path(tmp))

            prepared = runner.run_prepare()
            self.assertAlmostEqual(prepared.beta, 0.1)
            self.assertEqual(prepared.n_steps, 2)
            self.assertTrue((Path(tmp) / 'beta_0.0500.json').exists())
            records = read_series(prepared.series_path)
            self.assertEqual([round(r.beta, 6) for r in records], [0.0, 0.05, 0.1])
            self.assertEqual(records[0].segment, 'c2_sr')

            reference = runner.run_ed()
            ed_records = read_series(reference.series_path)
            self.assertEqual([r.segment for r in ed_records], ['ed_thermal'] * 3 + ['ed_evolve'] * 3)
            self.assertTrue(run_compare(prepared.series_path, reference.series_path, tolerance=0.05).passed)

            evolved = runner.run_evolve(prepared.checkpoint_path)
            self.assertAlmostEqual(evolved.t, 0.05)
            self.assertAlmostEqual(evolved.beta, 0.1)
            report = run_compare(evolved.series_path, reference.series_path, tolerance=0.05)
            self.assertTrue(report.passed, report.to_dict())
            self.assertEqual({c.axis for c in report.comparisons}, {'t'})

    def test_resumed_prepare_matches_uninterrupted_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            runner = ContourRunner(load_run_config(tiny_config(tmp)), Path(tmp))
            runner.run_prepare()
            uninterrupted = read_series(Path(tmp) / 'prepare.jsonl')

            # the series still holds the records written after the checkpoint
            resumed_result = runner.run_prepare(Path(tmp) / 'beta_0.0500.json')
            resumed = read_series(resumed_result.series_path)
        self.assertEqual(resumed_result.n_steps, 2)
        self.assertAlmostEqual(resumed_result.beta, 0.1)
        self.assertEqual([(r.beta, r.t) for r in resumed], [(r.beta, r.t) for r in uninterrupted])
        for before, after in zip(uninterrupted, resumed):
            for name, values in before.observables.items():
                self.assertAlmostEqual(after.observables[name]['mean'], values['mean'], places=10)

    def test_resumed_evolve_matches_uninterrupted_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            saved = []

            def keep_first_evolve_checkpoint(path, checkpoint):
                if path.name == 'evolve_latest.json' and not saved:
                    saved.append(write_checkpoint(checkpoint, Path(tmp) / 'evolve_mid'))

            config = load_run_config(tiny_config(tmp, t_target=0.1, checkpoint_every=3))
            runner = ContourRunner(config, Path(tmp), on_checkpoint=keep_first_evolve_checkpoint)
            prepared = runner.run_prepare()
            runner.run_evolve(prepared.checkpoint_path)
            uninterrupted = read_series(Path(tmp) / 'evolve.jsonl')
            self.assertEqual(len(saved), 1)
            self.assertAlmostEqual(read_checkpoint(saved[0]).t, 0.025)

            evolved = runner.run_evolve(saved[0])
            resumed = read_series(evolved.series_path)
        self.assertAlmostEqual(evolved.t, 0.1)
        self.assertEqual([(r.beta, r.t) for r in resumed], [(r.beta, r.t) for r in uninterrupted])
        for before, after in zip(uninterrupted, resumed):
            for name, values in before.observables.items():
                self.assertAlmostEqual(after.observables[name]['mean'], values['mean'], places=10)

    def test_prepare_rejects_evolve_checkpoint(self):
        with tempfile.TemporaryDirectory() as tmp:
            state = ArnnoXState.identity(2, hidden_size=2, rng=np.random.default_rng(0))
            path = write_checkpoint(Checkpoint(state, 0.1, 0.02, Segment.C3_TVMC, 3), Path(tmp) / 'evolve')
            runner = ContourRunner(load_run_config(tiny_config(tmp)), Path(tmp))
            with self.assertRaises(SchemaError):
                runner.run_prepare(path)

    def test_evolve_rejects_other_architecture(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Checkpoint(RbmoState.identity(2), 0.1, 0.0, Segment.C2_SR, 2),
                                    Path(tmp) / 'rbmo')
            runner = ContourRunner(load_run_config(tiny_config(tmp)), Path(tmp))
            with self.assertRaises(SchemaError):
                runner.run_evolve(path)

    def test_metts_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = load_run_config(tiny_config(tmp, metts={'n_samples': 40, 'n_chains': 2, 'discard': 2}))
            result = ContourRunner(config, Path(tmp)).run_metts()
            self.assertEqual(result.n_steps, 40)
            self.assertEqual(len(pd.read_csv(result.extra['samples_path'])), 40)
            record = read_series(result.series_path)[0]
            self.assertEqual(record.segment, 'metts')
            self.assertIn('energy_per_site', record.observables)


class RunServiceTests(TestCase):
    """Test stored runs"""

    def test_ed_run_records_result(self):
        with tempfile.TemporaryDirectory() as tmp:
            run = create_run('ed', load_run_config(tiny_config(tmp)))
            self.assertEqual(run.status, 'pending')
            self.assertEqual(run.output_dir, tmp)
            execute_run(run)
            run.refresh_from_db()
            self.assertEqual(run.status, 'done')
            self.assertTrue(run.series_path.endswith('ed.jsonl'))
            self.assertIsNotNone(run.completed_at)

    def test_prepare_run_resumes_from_checkpoint(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = load_run_config(tiny_config(tmp))
            execute_run(create_run('prepare', config))
            run = create_run('prepare', config)
            result = execute_run(run, str(Path(tmp) / 'beta_0.0500.json'))
            run.refresh_from_db()
            self.assertEqual(run.status, 'done')
            self.assertAlmostEqual(result.beta, 0.1)
            self.assertEqual(len(read_series(result.series_path)), 3)

    def test_evolve_without_checkpoint_fails(self):
        with tempfile.TemporaryDirectory() as tmp:
            run = create_run('evolve', load_run_config(tiny_config(tmp)))
            with self.assertRaises(SchemaError):
                execute_run(run)
            run.refresh_from_db()
            self.assertEqual(run.status, 'error')
            self.assertIn('checkpoint', run.error_message)


class RunApiTests(APITestCase):
    """Test the run endpoints"""

    @patch('apps.runs.views.run_simulation_task.delay')
    def test_submit_run(self, delay):
        response = self.client.post('/api/runs/', {'kind': 'prepare', 'config': tiny_config()}, format='json')
        self.assertEqual(response.status_code, status.HTTP_202_ACCEPTED)
        self.assertEqual(response.data['status'], 'pending')
        delay.assert_called_once_with(response.data['id'], None)

    @patch('apps.runs.views.run_simulation_task.delay')
    def test_submit_invalid_config(self, delay):
        response = self.client.post('/api/runs/', {'kind': 'prepare', 'config': tiny_config(beta_target=-1)},
                                    format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('errors', response.data)
        delay.assert_not_called()

    @patch('apps.runs.views.run_simulation_task.delay')
    def test_evolve_needs_checkpoint(self, delay):
        response = self.client.post('/api/runs/', {'kind': 'evolve', 'config': tiny_config()}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('checkpoint', response.data)

    def test_list_filters(self):
        SimulationRun.objects.create(kind='ed', status='done', output_dir='a')
        SimulationRun.objects.create(kind='prepare', output_dir='b')
        response = self.client.get('/api/runs/', {'kind': 'ed'})
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        results = response.data['results'] if isinstance(response.data, dict) else response.data
        self.assertEqual([r['kind'] for r in results], ['ed'])

    def test_series(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'ed.jsonl'
            with SeriesWriter(path) as writer:
                writer.write(_record(0.0, segment='ed_thermal'))
            run = SimulationRun.objects.create(kind='ed', status='done', output_dir=tmp, series_path=str(path))
            response = self.client.get(f'/api/runs/{run.id}/series/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 1)

        pending = SimulationRun.objects.create(kind='prepare', output_dir='x')
        response = self.client.get(f'/api/runs/{pending.id}/series/')
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
        self.assertEqual(self.client.get('/api/runs/9999/').status_code, status.HTTP_404_NOT_FOUND)


class CommandTests(TestCase):
    """Test the management commands"""

    def test_export_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'prepare.jsonl'
            with SeriesWriter(path) as writer:
                writer.write(_record(0.0, x=1.0))
            call_command('export_csv', str(path), '--smooth', '0')
            frame = pd.read_csv(Path(tmp) / 'prepare.csv')
        self.assertNotIn('x_smoothed', frame.columns)

    def test_compare_exit_codes(self):
        with tempfile.TemporaryDirectory() as tmp:
            a, b = Path(tmp) / 'a.jsonl', Path(tmp) / 'b.jsonl'
            for path, x in ((a, 0.0), (b, 1.0)):
                with SeriesWriter(path) as writer:
                    writer.write(_record(0.0, x=x))
            call_command('compare', str(a), str(a))
            with self.assertRaises(CommandError) as ctx:
                call_command('compare', str(a), str(b))
            self.assertEqual(ctx.exception.returncode, 2)
            with self.assertRaises(CommandError) as ctx:
                call_command('compare', str(a), str(Path(tmp) / 'missing.jsonl'))
            self.assertEqual(ctx.exception.returncode, 1)

    def test_ed_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            config_path = Path(tmp) / 'run.json'
            config_path.write_text(json.dumps(tiny_config()))
            call_command('ed', str(config_path), '--output', tmp)
            self.assertEqual(len(read_series(Path(tmp) / 'ed.jsonl')), 6)

    def test_bad_config_exit_code(self):
        with tempfile.TemporaryDirectory() as tmp:
            config_path = Path(tmp) / 'run.json'
            config_path.write_text(json.dumps(tiny_config(beta_target=-1)))
            with self.assertRaises(CommandError) as ctx:
                call_command('prepare', str(config_path))
            self.assertEqual(ctx.exception.returncode, 1)
