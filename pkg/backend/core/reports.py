"""
Verification reports and the bounded-ratio criterion shared by the check operations
"""
import csv
import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import psutil

logger = logging.getLogger(__name__)

SCHEMA_VERSION = '1.2'

ENVELOPE_CAP = 1e12
BOUND_CAP = 1e6
GROWTH_FACTOR = 1.5


def _clean(value: Any) -> Any:
    """Convert numpy scalars and non-finite floats into JSON-safe values"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return 'nan'
        if np.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


@dataclass
class CheckRecord:
    name: str
    estimate: float
    error: float
    tolerance: float
    passed: bool
    kind: str = 'residual'
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'name': self.name,
            'estimate': self.estimate,
            'error': self.error,
            'tolerance': self.tolerance,
            'passed': bool(self.passed),
            'kind': self.kind,
        }
        if self.detail:
            data['detail'] = self.detail
        return _clean(data)


@dataclass
class RatioProfile:
    """Outcome of the bounded-ratio test on one profile"""
    maximum: float
    minimum: float
    growth: float
    passed: bool


def bounded_profile(grid: Sequence[float], ratios: Sequence[float], cap: float = BOUND_CAP,
                    growth_factor: float = GROWTH_FACTOR, toward: str = 'up',
                    lower: bool = False) -> RatioProfile:
    """
    Decide whether a ratio profile stays bounded on a positive grid.

    The profile passes when every value is finite, below ``cap`` (or above
    ``1/cap`` when ``lower`` is set) and the last decade of the grid in the
    ``toward`` direction shows no monotone growth (decay for ``lower``) by more
    than ``growth_factor``.
    """
    grid = np.asarray(grid, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    if grid.size == 0 or grid.shape != ratios.shape:
        return RatioProfile(float('nan'), float('nan'), float('nan'), False)

    order = np.argsort(grid)
    grid, ratios = grid[order], ratios[order]
    if not np.all(np.isfinite(ratios)):
        return RatioProfile(float('inf'), float('nan'), float('inf'), False)

    maximum, minimum = float(ratios.max()), float(ratios.min())
    values = 1.0 / np.maximum(ratios, 1e-300) if lower else ratios

    if toward == 'up':
        window = values[grid >= grid[-1] / 10.0]
    else:
        window = values[grid <= grid[0] * 10.0][::-1]

    growth = 1.0
    if window.size >= 2 and window[0] > 0:
        monotone = bool(np.all(np.diff(window) >= 0))
        if monotone:
            growth = float(window[-1] / window[0])

    if lower:
        within_cap = minimum > 1.0 / cap and minimum > 0
    else:
        within_cap = maximum < cap
    passed = bool(within_cap and growth <= growth_factor)
    return RatioProfile(maximum, minimum, growth, passed)


def profile_max(keys, ratios) -> Tuple[np.ndarray, np.ndarray]:
    """Largest ratio per distinct grid key"""
    keys = np.asarray(keys, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    unique = np.unique(keys)
    return unique, np.array([ratios[keys == k].max() for k in unique])


class VerificationReport:
    """Structured pass/fail record for one verification suite"""

    def __init__(self, suite: str, seed: Optional[int] = None):
        self.suite = suite
        self.seed = seed
        self.checks: List[CheckRecord] = []
        self.metrics: Dict[str, Any] = {}
        self.tables: Dict[str, Dict[str, Any]] = {}
        self.children: List['VerificationReport'] = []
        self.config: Optional[Dict[str, Any]] = None
        self.started_at = datetime.now(timezone.utc)
        self._clock = time.perf_counter()
        self.wall_time: Optional[float] = None
        self.peak_rss_mb: Optional[float] = None

    # Recording

    def add_check(self, name: str, estimate: float, error: float, tolerance: float,
                  passed: bool, kind: str = 'residual', **detail) -> CheckRecord:
        record = CheckRecord(name, float(estimate), float(error), float(tolerance),
                             bool(passed), kind, detail)
        self.checks.append(record)
        logger.debug(f"[{self.suite}] {name}: estimate={record.estimate:.6g} "
                     f"error={record.error:.3g} passed={record.passed}")
        return record

    def add_statistical(self, name: str, estimate: float, std_err: float, target: float,
                        n_sigma: float = 3.0, floor: float = 0.0, **detail) -> CheckRecord:
        """Pass iff |estimate - target| <= n_sigma * std_err + floor"""
        tolerance = n_sigma * std_err + floor
        passed = bool(np.isfinite(estimate) and abs(estimate - target) <= tolerance)
        return self.add_check(name, estimate, std_err, tolerance, passed,
                              kind='statistical', target=target, n_sigma=n_sigma, **detail)

    def add_profile(self, name: str, grid: Sequence[float], ratios: Sequence[float],
                    cap: float = BOUND_CAP, growth_factor: float = GROWTH_FACTOR,
                    toward: str = 'up', lower: bool = False, table: bool = True) -> CheckRecord:
        profile = bounded_profile(grid, ratios, cap, growth_factor, toward, lower)
        if table:
            self.add_table(name, ['grid', 'ratio'], zip(np.asarray(grid, dtype=float),
                                                       np.asarray(ratios, dtype=float)))
        estimate = profile.minimum if lower else profile.maximum
        return self.add_check(name, estimate, profile.growth, cap, profile.passed,
                              kind='ratio', lower=lower, toward=toward)

    def add_metric(self, name: str, value: Any) -> None:
        self.metrics[name] = value

    def add_table(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        self.tables[name] = {'header': list(header), 'rows': [list(r) for r in rows]}

    def add_child(self, child: 'VerificationReport') -> None:
        self.children.append(child)

    # Outcome

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(r.passed for r in self.children)

    @property
    def failed_checks(self) -> List[str]:
        names = [c.name for c in self.checks if not c.passed]
        for child in self.children:
            names.extend(f"{child.suite}.{n}" for n in child.failed_checks)
        return names

    def finish(self) -> 'VerificationReport':
        self.wall_time = time.perf_counter() - self._clock
        try:
            self.peak_rss_mb = psutil.Process().memory_info().rss / 2 ** 20
        except psutil.Error:
            self.peak_rss_mb = None
        return self

    # Serialization

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = {
            'schema_version': SCHEMA_VERSION,
            'suite': self.suite,
            'seed': self.seed,
            'passed': self.passed,
            'checks': [c.to_dict() for c in self.checks],
            'metrics': _clean(self.metrics),
            'tables': sorted(self.tables),
            'children': [c.to_dict(include_timing=False) for c in self.children],
        }
        if self.config is not None:
            data['config'] = _clean(self.config)
        if include_timing:
            data['timing'] = {
                'started_at': self.started_at.isoformat(),
                'wall_time_seconds': self.wall_time,
                'peak_rss_mb': self.peak_rss_mb,
            }
        return data

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    def write(self, out_dir: Path, write_csv: bool = True) -> List[Path]:
        """Write the JSON report and its CSV side tables, return the written paths"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []

        report_path = out_dir / f"{self.suite}.json"
        report_path.write_text(self.to_json() + '\n')
        written.append(report_path)

        if write_csv:
            for prefix, report in self._table_owners():
                for name, table in sorted(report.tables.items()):
                    path = out_dir / f"{prefix}__{name}.csv"
                    with open(path, 'w', newline='') as f:
                        writer = csv.writer(f)
                        writer.writerow(table['header'])
                        for row in table['rows']:
                            writer.writerow([_clean(v) for v in row])
                    written.append(path)

        logger.info(f"Report for '{self.suite}' written to {report_path}")
        return written

    def _table_owners(self) -> List[Tuple[str, 'VerificationReport']]:
        """(dotted suite path, report) for this report and every descendant, paths made unique"""
        owners = []
        seen: Dict[str, int] = {}

        def visit(report: 'VerificationReport', path: str) -> None:
            count = seen.get(path, 0) + 1
            seen[path] = count
            owners.append((path if count == 1 else f'{path}-{count}', report))
            for child in report.children:
                visit(child, f'{path}.{child.suite}')

        visit(self, self.suite)
        return owners
