"""
Time series: one JSON record per line, CSV export with optional smoothing
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union
import json
import logging

import numpy as np
import pandas as pd

from ntfsim.exceptions import ContractViolation, SchemaError

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING_WINDOW = 50
_POSITION_TOLERANCE = 1e-12


def _to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


@dataclass
class TimeSeriesRecord:
    """observables maps name -> {'mean': float, 'stderr': float}."""
    segment: str
    beta: float
    t: float
    observables: Dict[str, Dict[str, float]] = field(default_factory=dict)
    energy: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'segment': self.segment,
            'beta': self.beta,
            't': self.t,
            'observables': self.observables,
            'energy': self.energy,
            'diagnostics': self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TimeSeriesRecord':
        try:
            return cls(
                segment=data['segment'],
                beta=float(data['beta']),
                t=float(data['t']),
                observables=data.get('observables', {}),
                energy=data.get('energy'),
                diagnostics=data.get('diagnostics', {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f'malformed series record: {e}') from e


class SeriesWriter:
    """
    Append-only JSONL writer enforcing non-decreasing beta and t.

    Usage:
        with SeriesWriter(path) as writer:
            writer.write(record)
    """

    def __init__(self, path: Union[str, Path], append: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._last = None
        if append and self.path.exists():
            records = read_series(self.path)
            if records:
                self._last = (records[-1].beta, records[-1].t)
        self._file = open(self.path, 'a' if append else 'w')

    def write(self, record: TimeSeriesRecord):
        if self._last is not None:
            beta, t = self._last
            if record.beta < beta - _POSITION_TOLERANCE or record.t < t - _POSITION_TOLERANCE:
                raise ContractViolation(
                    f'series position went backwards: ({beta}, {t}) -> ({record.beta}, {record.t})'
                )
        self._file.write(json.dumps(record.to_dict(), default=_to_builtin) + '\n')
        self._file.flush()
        self._last = (record.beta, record.t)

    def close(self):
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_series(path: Union[str, Path]) -> List[TimeSeriesRecord]:
    records = []
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(TimeSeriesRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as e:
                raise SchemaError(f'{path}:{number}: {e}') from e
    return records


def truncate_series(path: Union[str, Path], beta: float, t: float) -> int:
    """
    Drop records past (beta, t) so a resumed run can append from a checkpoint.

    Returns the number of records kept; a missing file keeps none.
    """
    path = Path(path)
    if not path.exists():
        return 0
    records = read_series(path)
    kept = [r for r in records
            if r.beta <= beta + _POSITION_TOLERANCE and r.t <= t + _POSITION_TOLERANCE]
    with open(path, 'w') as f:
        for record in kept:
            f.write(json.dumps(record.to_dict(), default=_to_builtin) + '\n')
    if len(kept) < len(records):
        logger.info('Dropped %d records past beta=%.4f, t=%.4f from %s',
                    len(records) - len(kept), beta, t, path)
    return len(kept)


def series_frame(records: Iterable[TimeSeriesRecord]) -> pd.DataFrame:
    """Flat frame: segment, beta, t, energy, <name>, <name>_stderr."""
    rows = []
    for record in records:
        row = {'segment': record.segment, 'beta': record.beta, 't': record.t, 'energy': record.energy}
        for name, values in record.observables.items():
            row[name] = values.get('mean')
            row[f'{name}_stderr'] = values.get('stderr', 0.0)
        rows.append(row)
    return pd.DataFrame(rows)


def observable_names(frame: pd.DataFrame) -> List[str]:
    fixed = {'segment', 'beta', 't', 'energy'}
    return [c for c in frame.columns if c not in fixed and not c.endswith('_stderr')]


def export_csv(series_path: Union[str, Path], csv_path: Union[str, Path],
               smooth_window: Optional[int] = DEFAULT_SMOOTHING_WINDOW) -> pd.DataFrame:
    """Write the series as CSV; smoothed columns are added next to the raw ones."""
    frame = series_frame(read_series(series_path))
    if smooth_window and smooth_window > 1 and not frame.empty:
        for name in observable_names(frame):
            frame[f'{name}_smoothed'] = frame[name].rolling(window=smooth_window, min_periods=1).mean()
    Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(csv_path, index=False)
    logger.info('Exported %d rows to %s', len(frame), csv_path)
    return frame
