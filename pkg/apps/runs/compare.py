"""
Series comparison: variational runs against ED or METTS references.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union
import logging
import math

import numpy as np
import pandas as pd

from ntfsim.exceptions import SchemaError

from .series import observable_names, read_series, series_frame

logger = logging.getLogger(__name__)

REAL_TIME_SEGMENTS = frozenset({'c3_tvmc', 'ed_evolve'})


@dataclass
class ObservableComparison:
    name: str
    axis: str
    n_points: int
    max_abs_difference: float
    max_sigma_deviation: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        def finite(value):
            return value if math.isfinite(value) else None
        return {
            'name': self.name,
            'axis': self.axis,
            'n_points': self.n_points,
            'max_abs_difference': finite(self.max_abs_difference),
            'max_sigma_deviation': finite(self.max_sigma_deviation),
            'passed': self.passed,
        }


@dataclass
class CompareReport:
    tolerance: float
    n_sigma: float
    comparisons: List[ObservableComparison] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.comparisons) and all(c.passed for c in self.comparisons)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'tolerance': self.tolerance,
            'n_sigma': self.n_sigma,
            'comparisons': [c.to_dict() for c in self.comparisons],
        }


def _split_axes(frame: pd.DataFrame) -> Dict[str, pd.DataFrame]:
    real_time = frame['segment'].isin(REAL_TIME_SEGMENTS)
    return {'beta': frame[~real_time], 't': frame[real_time]}


def _compare_axis(name: str, axis: str, a: pd.DataFrame, b: pd.DataFrame,
                  tolerance: float, n_sigma: float) -> ObservableComparison:
    a = a.dropna(subset=[name]).sort_values(axis).drop_duplicates(axis, keep='last')
    b = b.dropna(subset=[name]).sort_values(axis).drop_duplicates(axis, keep='last')
    lo = max(a[axis].min(), b[axis].min())
    hi = min(a[axis].max(), b[axis].max())
    points = a[(a[axis] >= lo) & (a[axis] <= hi)]
    if points.empty:
        return ObservableComparison(name, axis, 0, math.inf, math.inf, False)

    x = points[axis].to_numpy()
    reference = np.interp(x, b[axis].to_numpy(), b[name].to_numpy())
    reference_err = np.interp(x, b[axis].to_numpy(), b[f'{name}_stderr'].fillna(0.0).to_numpy())
    sigma = np.hypot(points[f'{name}_stderr'].fillna(0.0).to_numpy(), reference_err)
    diff = np.abs(points[name].to_numpy() - reference)

    allowed = np.maximum(tolerance, n_sigma * sigma)
    with np.errstate(divide='ignore', invalid='ignore'):
        deviation = np.where(sigma > 0, diff / sigma, np.where(diff > 0, np.inf, 0.0))
    return ObservableComparison(
        name=name,
        axis=axis,
        n_points=len(x),
        max_abs_difference=float(diff.max()),
        max_sigma_deviation=float(deviation.max()),
        passed=bool(np.all(diff <= allowed)),
    )


def run_compare(series_a: Union[str, Path], series_b: Union[str, Path],
                tolerance: float = 0.02, n_sigma: float = 3.0) -> CompareReport:
    """
    Compare observables shared by two series.

    Points of the first series inside the overlap of both axes are checked
    against the second series interpolated linearly; a point passes when
    |difference| <= max(tolerance, n_sigma * combined stderr).
    """
    frame_a = series_frame(read_series(series_a))
    frame_b = series_frame(read_series(series_b))
    if frame_a.empty or frame_b.empty:
        raise SchemaError('cannot compare an empty series')

    shared = [n for n in observable_names(frame_a) if n in set(observable_names(frame_b))]
    report = CompareReport(tolerance=tolerance, n_sigma=n_sigma)
    axes_a, axes_b = _split_axes(frame_a), _split_axes(frame_b)
    for axis in ('beta', 't'):
        if axes_a[axis].empty or axes_b[axis].empty:
            continue
        for name in shared:
            report.comparisons.append(
                _compare_axis(name, axis, axes_a[axis], axes_b[axis], tolerance, n_sigma)
            )

    for c in report.comparisons:
        logger.info('compare %s on %s: max |d|=%.4g over %d points -> %s',
                    c.name, c.axis, c.max_abs_difference, c.n_points, 'ok' if c.passed else 'FAIL')
    return report
