"""
Repeated-split experiment protocol.

Repeat r uses split seed r: a random 75/25 split, min-max scaling fitted on
the training part, optional L2 selection by cross-validation on the training
part, training, then every criterion at every iteration on both parts.
Arms of a comparison share the split seeds so their runs are paired.
"""
from typing import Dict, List, Optional, Sequence, Union
from dataclasses import replace
import logging
import time

from rethinknet.classifier.br_classifier import BRConfig
from rethinknet.classifier.rethinknet_classifier import ModelConfig, hidden_dim_for_budget
from rethinknet.classifier.training import (
    L2_GRID, ClassifierConfig, TrainConfig, build_classifier, evaluate_all, fit, select_l2)
from rethinknet.common.costs import ALL_COSTS, get_cost
from rethinknet.common.errors import DivergenceError, SizeError
from rethinknet.common.parallel import parallel_map
from rethinknet.dataset.loader import load_dataset
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset, scale_features
from rethinknet.dataset.splits import split
from rethinknet.harness.report import ComparisonReport, ExperimentReport, RunRecord, rethink_curve
from rethinknet.harness.ttest import paired_ttest
from rethinknet.model.rnn.cells import CELL_KINDS

logger = logging.getLogger(__name__)

CURVE_ITERATIONS = 5
PARAMETER_BUDGET = 200_000

DatasetLike = Union[str, MultiLabelDataset]

__all__ = [
    'run_experiment', 'compare_reweighting', 'compare_cells', 'br_baseline',
    'compare_with_br', 'rethink_curve', 'rethink_curve_experiment', 'paired_tests',
]


def _as_dataset(dataset: DatasetLike, fmt: str = 'auto',
        label_spec: Optional[str] = None) -> MultiLabelDataset:
    if isinstance(dataset, MultiLabelDataset):
        return dataset
    return load_dataset(dataset, fmt=fmt, label_spec=label_spec)


def _label(config: ClassifierConfig) -> str:
    if isinstance(config, BRConfig):
        return 'br'
    reweight = 'reweighted' if config.reweighted else 'plain'
    return f'rethinknet-{config.cell}-{reweight}'


def _run_once(task) -> RunRecord:
    ds, config, train_config, seed, cv = task
    start = time.perf_counter()
    train, test = split(ds, seed=seed).apply(ds)
    train, normalizer = scale_features(train)
    test, _ = scale_features(test, normalizer)
    config = replace(config, seed=seed, n_features=ds.n_features, n_labels=ds.n_labels)
    try:
        # a fold diverging during selection excludes the whole run
        if cv is not None:
            selection = select_l2(train, config, train_config,
                grid=cv['grid'], folds=cv['folds'], seed=seed, num_workers=1)
            config = replace(config, l2_strength=selection.best)
        model = fit(build_classifier(config), train, train_config)
    except DivergenceError as e:
        logger.warning("excluding run with seed %d: diverged at epoch %d, batch %d",
            seed, e.epoch, e.batch)
        return RunRecord(seed=seed, l2_strength=config.l2_strength,
            diverged=True, error=str(e),
            wall_clock_seconds=time.perf_counter() - start)

    train_eval = evaluate_all(model, train)
    test_eval = evaluate_all(model, test)
    return RunRecord(
        seed=seed,
        l2_strength=config.l2_strength,
        train={k: v.per_iteration for k, v in train_eval.items()},
        test={k: v.per_iteration for k, v in test_eval.items()},
        epochs=len(model.history),
        wall_clock_seconds=time.perf_counter() - start)


def run_experiment(dataset: DatasetLike,
        config: ClassifierConfig,
        train_config: Optional[TrainConfig] = None,
        repeats: int = 10,
        l2_cv: bool = False,
        l2_grid: Sequence[float] = L2_GRID,
        cv_folds: int = 3,
        seeds: Optional[Sequence[int]] = None,
        num_workers: Optional[int] = None,
        label: Optional[str] = None,
        fmt: str = 'auto',
        label_spec: Optional[str] = None) -> ExperimentReport:
    ds = _as_dataset(dataset, fmt=fmt, label_spec=label_spec)
    if train_config is None:
        train_config = TrainConfig()
    if seeds is None:
        seeds = list(range(repeats))
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise SizeError(f"need at least 2 repeats, got {len(seeds)}")
    config = replace(config, n_features=ds.n_features, n_labels=ds.n_labels)
    cv = {'grid': list(l2_grid), 'folds': cv_folds} if l2_cv else None

    label = label or _label(config)
    logger.info("%s on %s: %d runs with seeds %s", label, ds.name, len(seeds), seeds)
    runs = parallel_map(_run_once,
        [(ds, config, train_config, seed, cv) for seed in seeds],
        num_workers=num_workers)

    snapshot = {
        'model': config.to_dict(),
        'training': train_config.to_dict(),
        'l2_cv': None if cv is None else cv,
    }
    report = ExperimentReport(
        dataset=ds.name,
        label=label,
        config=snapshot,
        n_iterations=getattr(config, 'rethink_iterations', 1),
        criteria=[c.name for c in ALL_COSTS],
        n_parameters=build_classifier(config).num_parameters(),
        runs=runs)
    if report.n_excluded > 0:
        logger.warning("%s: %d of %d runs diverged and are excluded",
            label, report.n_excluded, len(runs))
    return report


def paired_tests(a: ExperimentReport, b: ExperimentReport,
        split_name: str = 'test') -> Dict:
    """Paired t-test of arm ``a`` against arm ``b`` per criterion, over seeds valid in both."""
    a_by_seed = {r.seed: r for r in a.valid_runs}
    b_by_seed = {r.seed: r for r in b.valid_runs}
    seeds = [s for s in a.seeds if s in a_by_seed and s in b_by_seed]
    if len(seeds) < 2:
        logger.warning("only %d paired runs; skipping t-tests", len(seeds))
        return dict()
    tests = dict()
    for criterion in a.criteria:
        cost = get_cost(criterion)
        va = [getattr(a_by_seed[s], split_name)[criterion][-1] for s in seeds]
        vb = [getattr(b_by_seed[s], split_name)[criterion][-1] for s in seeds]
        tests[criterion] = paired_ttest(va, vb, lower_is_better=cost.lower_is_better)
    return tests


def _compare(kind: str, ds: MultiLabelDataset, arms: Dict[str, ClassifierConfig],
        pair, train_config, repeats, **kwargs) -> ComparisonReport:
    reports = dict()
    for name, config in arms.items():
        reports[name] = run_experiment(ds, config, train_config, repeats=repeats,
            label=name, **kwargs)
    seed_lists = [r.seeds for r in reports.values()]
    assert all(s == seed_lists[0] for s in seed_lists), "arms must share split seeds"
    logger.info("%s: arms %s paired on seeds %s", kind, list(reports.keys()), seed_lists[0])
    tests = dict()
    if pair is not None:
        tests = paired_tests(reports[pair[0]], reports[pair[1]])
    return ComparisonReport(kind=kind, dataset=ds.name, arms=reports, pair=pair, tests=tests)


def compare_reweighting(dataset: DatasetLike,
        config: ModelConfig,
        train_config: Optional[TrainConfig] = None,
        repeats: int = 10,
        fmt: str = 'auto',
        label_spec: Optional[str] = None,
        **kwargs) -> ComparisonReport:
    ds = _as_dataset(dataset, fmt=fmt, label_spec=label_spec)
    arms = {
        'reweighted': replace(config, reweighted=True),
        'non-reweighted': replace(config, reweighted=False),
    }
    return _compare('reweighting', ds, arms, ('reweighted', 'non-reweighted'),
        train_config, repeats, **kwargs)


def compare_cells(dataset: DatasetLike,
        config: ModelConfig,
        train_config: Optional[TrainConfig] = None,
        repeats: int = 10,
        cells: Sequence[str] = CELL_KINDS,
        parameter_budget: Optional[int] = None,
        fmt: str = 'auto',
        label_spec: Optional[str] = None,
        **kwargs) -> ComparisonReport:
    """
    Same protocol for every cell kind. With ``parameter_budget`` each cell
    gets the hidden size whose parameter count is closest to the budget.
    """
    ds = _as_dataset(dataset, fmt=fmt, label_spec=label_spec)
    arms = dict()
    for cell in cells:
        arm = replace(config, cell=cell)
        if parameter_budget is not None:
            hidden = hidden_dim_for_budget(cell, ds.n_features, ds.n_labels, parameter_budget)
            arm = replace(arm, hidden_dim=hidden)
        arms[arm.cell] = arm
    return _compare('cells', ds, arms, None, train_config, repeats, **kwargs)


def br_baseline(dataset: DatasetLike,
        train_config: Optional[TrainConfig] = None,
        repeats: int = 10,
        hidden_dim: int = 128,
        l2_strength: float = 0.0,
        **kwargs) -> ExperimentReport:
    config = BRConfig(hidden_dim=hidden_dim, l2_strength=l2_strength)
    return run_experiment(dataset, config, train_config, repeats=repeats, label='br', **kwargs)


def compare_with_br(dataset: DatasetLike,
        config: ModelConfig,
        train_config: Optional[TrainConfig] = None,
        repeats: int = 10,
        br_hidden_dim: int = 128,
        fmt: str = 'auto',
        label_spec: Optional[str] = None,
        **kwargs) -> ComparisonReport:
    ds = _as_dataset(dataset, fmt=fmt, label_spec=label_spec)
    arms = {
        'rethinknet': config,
        'br': BRConfig(hidden_dim=br_hidden_dim, l2_strength=config.l2_strength),
    }
    return _compare('br', ds, arms, ('rethinknet', 'br'), train_config, repeats, **kwargs)


def rethink_curve_experiment(dataset: DatasetLike,
        config: ModelConfig,
        train_config: Optional[TrainConfig] = None,
        repeats: int = 10,
        iterations: int = CURVE_ITERATIONS,
        **kwargs) -> List[Dict]:
    report = run_experiment(dataset, replace(config, rethink_iterations=iterations),
        train_config, repeats=repeats, **kwargs)
    return rethink_curve(report)
