"""
Experiment reports and their JSON / CSV / markdown renderings.

JSON layout (schema "rethinknet.report", version 1):

    {"schema", "schema_version", "report_type": "experiment" | "comparison", ...}

An experiment report holds one record per run with the per-iteration value
of every criterion on the train and test split; aggregates are derived from
the valid runs and re-derived on load. A comparison report holds one
experiment report per arm plus paired t-tests between two arms.
"""
from typing import Dict, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np

from rethinknet.common.checkpoint_util import atomic_write_text
from rethinknet.common.costs import get_cost
from rethinknet.common.errors import ParameterError, SchemaError, UsageError
from rethinknet.harness.ttest import TTestResult, VerdictTally, tally_verdicts

SCHEMA = 'rethinknet.report'
SCHEMA_VERSION = 1
SPLITS = ('train', 'test')
FORMATS = ('json', 'csv', 'md')
_FORMAT_ALIASES = {
    'json': 'json',
    'csv': 'csv',
    'md': 'md',
    'markdown': 'md',
    'markdown-table': 'md',
}
TIMING_KEY = 'wall_clock_seconds'


@dataclass
class RunRecord:
    seed: int
    l2_strength: float
    train: Dict[str, List[float]] = field(default_factory=dict)
    test: Dict[str, List[float]] = field(default_factory=dict)
    epochs: int = 0
    diverged: bool = False
    error: Optional[str] = None
    wall_clock_seconds: float = 0.0

    def to_dict(self) -> Dict:
        return {
            'seed': self.seed,
            'l2_strength': self.l2_strength,
            'train': {k: list(v) for k, v in self.train.items()},
            'test': {k: list(v) for k, v in self.test.items()},
            'epochs': self.epochs,
            'diverged': self.diverged,
            'error': self.error,
            TIMING_KEY: self.wall_clock_seconds,
        }

    @classmethod
    def from_dict(cls, d: Dict) -> 'RunRecord':
        return cls(
            seed=int(d['seed']),
            l2_strength=float(d['l2_strength']),
            train={k: [float(x) for x in v] for k, v in d.get('train', {}).items()},
            test={k: [float(x) for x in v] for k, v in d.get('test', {}).items()},
            epochs=int(d.get('epochs', 0)),
            diverged=bool(d.get('diverged', False)),
            error=d.get('error'),
            wall_clock_seconds=float(d.get(TIMING_KEY, 0.0)))


@dataclass(frozen=True)
class Aggregate:
    mean: Optional[float]
    ste: Optional[float]
    n: int

    def to_dict(self) -> Dict:
        return {'mean': self.mean, 'ste': self.ste, 'n': self.n}


def aggregate(values: Sequence[float]) -> Aggregate:
    """Mean and standard error (sample std / sqrt(n)); ste needs two values."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n == 0:
        return Aggregate(mean=None, ste=None, n=0)
    mean = float(values.mean())
    ste = float(values.std(ddof=1) / math.sqrt(n)) if n >= 2 else None
    return Aggregate(mean=mean, ste=ste, n=n)


@dataclass
class ExperimentReport:
    dataset: str
    label: str
    config: Dict
    n_iterations: int
    criteria: List[str]
    n_parameters: int = 0
    runs: List[RunRecord] = field(default_factory=list)

    @property
    def valid_runs(self) -> List[RunRecord]:
        return [r for r in self.runs if not r.diverged]

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.runs]

    @property
    def n_excluded(self) -> int:
        return len(self.runs) - len(self.valid_runs)

    def values(self, criterion: str, split: str = 'test',
            iteration: Optional[int] = None) -> List[float]:
        """Per valid run values at ``iteration`` (1-based, default the last)."""
        if split not in SPLITS:
            raise ParameterError(f"split must be one of {SPLITS}, got {split}")
        t = self.n_iterations if iteration is None else iteration
        if not 1 <= t <= self.n_iterations:
            raise ParameterError(f"iteration must lie in 1..{self.n_iterations}, got {t}")
        criterion = get_cost(criterion).name
        return [getattr(r, split)[criterion][t - 1] for r in self.valid_runs]

    def aggregate(self, criterion: str, split: str = 'test',
            iteration: Optional[int] = None) -> Aggregate:
        return aggregate(self.values(criterion, split, iteration))

    def aggregates(self) -> Dict:
        result = dict()
        for split in SPLITS:
            result[split] = dict()
            for criterion in self.criteria:
                result[split][criterion] = {
                    **self.aggregate(criterion, split).to_dict(),
                    'per_iteration': [
                        self.aggregate(criterion, split, t).to_dict()
                        for t in range(1, self.n_iterations + 1)],
                }
        return result

    def to_dict(self, include_header: bool = True) -> Dict:
        d = {
            'dataset': self.dataset,
            'label': self.label,
            'config': self.config,
            'n_iterations': self.n_iterations,
            'criteria': list(self.criteria),
            'n_parameters': self.n_parameters,
            'seeds': self.seeds,
            'n_excluded': self.n_excluded,
            'runs': [r.to_dict() for r in self.runs],
            'aggregates': self.aggregates(),
        }
        if include_header:
            d.update(_header('experiment'))
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> 'ExperimentReport':
        try:
            return cls(
                dataset=d['dataset'],
                label=d['label'],
                config=d['config'],
                n_iterations=int(d['n_iterations']),
                criteria=list(d['criteria']),
                n_parameters=int(d.get('n_parameters', 0)),
                runs=[RunRecord.from_dict(r) for r in d['runs']])
        except KeyError as e:
            raise SchemaError(f"experiment report is missing key {e}")


@dataclass
class ComparisonReport:
    kind: str
    dataset: str
    arms: Dict[str, ExperimentReport]
    # tests compare arm pair[0] against pair[1]
    pair: Optional[Tuple[str, str]] = None
    tests: Dict[str, TTestResult] = field(default_factory=dict)

    @property
    def criteria(self) -> List[str]:
        return next(iter(self.arms.values())).criteria

    def tally(self) -> VerdictTally:
        return tally_verdicts(self.tests.values())

    def to_dict(self) -> Dict:
        d = {
            'kind': self.kind,
            'dataset': self.dataset,
            'arms': {name: arm.to_dict(include_header=False) for name, arm in self.arms.items()},
            'arm_order': list(self.arms.keys()),
            'pair': None if self.pair is None else list(self.pair),
            'tests': {k: v.to_dict() for k, v in self.tests.items()},
        }
        d.update(_header('comparison'))
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> 'ComparisonReport':
        try:
            order = d.get('arm_order', list(d['arms'].keys()))
            return cls(
                kind=d['kind'],
                dataset=d['dataset'],
                arms={name: ExperimentReport.from_dict(d['arms'][name]) for name in order},
                pair=None if d.get('pair') is None else tuple(d['pair']),
                tests={k: TTestResult.from_dict(v) for k, v in d.get('tests', {}).items()})
        except KeyError as e:
            raise SchemaError(f"comparison report is missing key {e}")


Report = Union[ExperimentReport, ComparisonReport]


def _header(report_type: str) -> Dict:
    return {'schema': SCHEMA, 'schema_version': SCHEMA_VERSION, 'report_type': report_type}


def report_from_dict(d: Dict) -> Report:
    if d.get('schema') != SCHEMA:
        raise SchemaError(f"not a {SCHEMA} document")
    if d.get('schema_version') != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {d.get('schema_version')}")
    report_type = d.get('report_type')
    if report_type == 'experiment':
        return ExperimentReport.from_dict(d)
    if report_type == 'comparison':
        return ComparisonReport.from_dict(d)
    raise SchemaError(f"unknown report_type {report_type!r}")


def load_report(path: str) -> Report:
    with open(path, 'r') as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path} is not valid JSON: {e}")
    return report_from_dict(d)


# ========= rendering ============
def rethink_curve(report: ExperimentReport) -> List[Dict]:
    """One row per iteration t with the train and test mean of every criterion."""
    if report.n_iterations < 2:
        raise ParameterError(f"a rethink curve needs B >= 2, got {report.n_iterations}")
    rows = list()
    for t in range(1, report.n_iterations + 1):
        row = {'iteration': t}
        for split in SPLITS:
            for criterion in report.criteria:
                row[f'{split}_{criterion}'] = report.aggregate(criterion, split, t).mean
        rows.append(row)
    return rows


def _fmt(agg: Aggregate) -> str:
    if agg.mean is None:
        return '-'
    if agg.ste is None:
        return f'{agg.mean:.4f}'
    return f'{agg.mean:.4f} ± {agg.ste:.4f}'


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ['| ' + ' | '.join(header) + ' |',
             '|' + '|'.join('---' for _ in header) + '|']
    for row in rows:
        lines.append('| ' + ' | '.join(row) + ' |')
    return '\n'.join(lines)


def _best_flags(criterion: str, means: Sequence[Optional[float]]) -> List[bool]:
    cost = get_cost(criterion)
    present = [m for m in means if m is not None]
    if len(present) == 0:
        return [False] * len(means)
    best = present[cost.best(present)]
    return [m is not None and m == best for m in means]


def _render_experiment_md(report: ExperimentReport) -> str:
    rows = [[c, _fmt(report.aggregate(c, 'train')), _fmt(report.aggregate(c, 'test'))]
        for c in report.criteria]
    parts = [
        f'### {report.label} on {report.dataset}',
        '',
        f'runs: {len(report.valid_runs)} (excluded {report.n_excluded}), '
        f'B={report.n_iterations}, parameters: {report.n_parameters:,}',
        '',
        _md_table(['criterion', 'train', 'test'], rows)]
    if report.n_iterations >= 2:
        curve = rethink_curve(report)
        header = ['t'] + [f'{s} {c}' for s in SPLITS for c in report.criteria]
        curve_rows = [[str(row['iteration'])] + [
            '-' if row[f'{s}_{c}'] is None else f"{row[f'{s}_{c}']:.4f}"
            for s in SPLITS for c in report.criteria] for row in curve]
        parts += ['', _md_table(header, curve_rows)]
    return '\n'.join(parts) + '\n'


def _render_comparison_md(report: ComparisonReport) -> str:
    names = list(report.arms.keys())
    parts = [f'### {report.kind} on {report.dataset}', '']
    for split in reversed(SPLITS):
        rows = list()
        for criterion in report.criteria:
            aggs = [report.arms[n].aggregate(criterion, split) for n in names]
            flags = _best_flags(criterion, [a.mean for a in aggs])
            cells = [f'**{_fmt(a)}**' if flag else _fmt(a) for a, flag in zip(aggs, flags)]
            row = [criterion] + cells
            if report.tests:
                test = report.tests.get(criterion)
                row.append('-' if test is None else test.verdict.value)
            rows.append(row)
        header = [f'{split} criterion'] + names
        if report.tests:
            header.append(f'{report.pair[0]} vs {report.pair[1]}')
        parts += [_md_table(header, rows), '']
    params = [f'{report.arms[n].n_parameters:,}' for n in names]
    parts.append(_md_table(['parameters'] + names, [[''] + params]))
    if report.tests:
        parts += ['', f'win/tie/loss: {report.tally()}']
    return '\n'.join(parts) + '\n'


def _csv_rows(report: Report) -> List[Dict]:
    arms = report.arms if isinstance(report, ComparisonReport) else {report.label: report}
    rows = list()
    for arm_name, arm in arms.items():
        for run_idx, run in enumerate(arm.runs):
            if run.diverged:
                continue
            for criterion in arm.criteria:
                for t in range(arm.n_iterations):
                    rows.append({
                        'arm': arm_name,
                        'run': run_idx,
                        'seed': run.seed,
                        'criterion': criterion,
                        'iteration': t + 1,
                        'train': repr(run.train[criterion][t]),
                        'test': repr(run.test[criterion][t]),
                    })
    return rows


def to_json(report: Report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + '\n'


def render_report(report: Report, fmt: str = 'json') -> str:
    fmt = _FORMAT_ALIASES.get(str(fmt).lower())
    if fmt is None:
        raise UsageError(f"unknown report format, expected one of {FORMATS}")
    if fmt == 'json':
        return to_json(report)
    if fmt == 'csv':
        buf = io.StringIO()
        writer = csv.DictWriter(buf,
            fieldnames=['arm', 'run', 'seed', 'criterion', 'iteration', 'train', 'test'],
            lineterminator='\n')
        writer.writeheader()
        writer.writerows(_csv_rows(report))
        return buf.getvalue()
    if isinstance(report, ComparisonReport):
        return _render_comparison_md(report)
    return _render_experiment_md(report)


def emit_report(report: Report, path: str, fmt: str = 'json') -> str:
    return atomic_write_text(path, render_report(report, fmt))


# ========= tallies over datasets ============
def tally_table(reports: Sequence[ComparisonReport]) -> Dict[str, VerdictTally]:
    """Per-criterion win/tie/loss over datasets plus a 'total' row."""
    table = dict()
    for report in reports:
        for criterion, test in report.tests.items():
            table[criterion] = table.get(criterion, VerdictTally()) + tally_verdicts([test])
    total = VerdictTally()
    for tally in table.values():
        total = total + tally
    table['total'] = total
    return table


def render_tally(table: Dict[str, VerdictTally], fmt: str = 'md') -> str:
    fmt = _FORMAT_ALIASES.get(str(fmt).lower())
    if fmt is None:
        raise UsageError(f"unknown report format, expected one of {FORMATS}")
    if fmt == 'json':
        return json.dumps({k: v.to_dict() for k, v in table.items()}, sort_keys=True, indent=2) + '\n'
    if fmt == 'csv':
        lines = ['criterion,win,tie,loss'] + [
            f'{k},{v.win},{v.tie},{v.loss}' for k, v in table.items()]
        return '\n'.join(lines) + '\n'
    rows = [[k, str(v)] for k, v in table.items()]
    return _md_table(['criterion', 'win/tie/loss'], rows) + '\n'
