"""
Command line entry point: ``python -m rethinknet <command> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error
(unreadable, malformed or inconsistent input), 4 training divergence.
"""
from typing import Dict, Optional, Sequence
import argparse
import json
import logging
import pathlib
import sys

from omegaconf import OmegaConf

from rethinknet.common.checkpoint_util import atomic_write_text
from rethinknet.common.errors import (
    ConfigurationError, DimensionError, DivergenceError, NonFiniteError, ParameterError,
    ParseError, RethinkNetError, SchemaError, SizeError, UsageError)
from rethinknet.dataset.loader import FORMATS, load_dataset
from rethinknet.harness.correlation import export_correlation_analysis
from rethinknet.harness.report import (
    ComparisonReport, load_report, render_report, render_tally, tally_table)
from rethinknet.model.rnn.cells import CELL_KINDS
from rethinknet.workspace.config_util import compose_config
from rethinknet.workspace.experiment_workspace import ExperimentWorkspace
from rethinknet.workspace.train_rethinknet_workspace import TrainRethinkNetWorkspace

logger = logging.getLogger('rethinknet')

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4

COSTS = ('hamming', 'f1', 'accuracy', 'rankloss')


# ========= argument parsing ============
def _add_data_args(parser: argparse.ArgumentParser):
    parser.add_argument('--data', required=True, help='dataset file (ARFF or native)')
    parser.add_argument('--format', choices=FORMATS, default='auto')
    parser.add_argument('--labels', default=None,
        help='last_k:<K> or xml:<path>; ARFF only')
    parser.add_argument('--task', default=None,
        help='task config to start from (emotions, scene, yeast, ...)')


def _add_model_args(parser: argparse.ArgumentParser):
    parser.add_argument('--cost', choices=COSTS, default=None)
    parser.add_argument('--cell', choices=CELL_KINDS, default=None)
    parser.add_argument('--hidden', type=int, default=None)
    parser.add_argument('--iters', type=int, default=None)
    parser.add_argument('--no-reweight', action='store_true')
    parser.add_argument('--weights', choices=('mean', 'raw'), default=None,
        help='normalization of the label importance weights')
    parser.add_argument('--dropout', type=float, default=None)
    parser.add_argument('--l2', default=None, help="L2 strength or 'cv' for grid search")
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--epochs', type=int, default=None)
    parser.add_argument('--batch-size', type=int, default=None)
    parser.add_argument('--patience', type=int, default=None)
    parser.add_argument('--lr', type=float, default=None)


def _add_experiment_args(parser: argparse.ArgumentParser, repeats: bool = True):
    _add_data_args(parser)
    _add_model_args(parser)
    if repeats:
        parser.add_argument('--repeats', type=int, default=10)
    parser.add_argument('--threads', type=int, default=None,
        help='parallel runs, defaults to $RETHINK_THREADS or the core count')
    parser.add_argument('--out', required=True, help='report JSON path')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='rethinknet',
        description='Cost-sensitive multi-label classification with RethinkNet')
    parser.add_argument('-v', '--verbose', action='store_true')
    parser.add_argument('--progress', action='store_true', help='show epoch progress bars')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('train', help='train one model and save it')
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument('--out', required=True, help='model file')
    p.add_argument('--log', default=None, help='per-epoch JSON log path')
    p.add_argument('--log-criteria', nargs='+', choices=COSTS, default=None,
        help='criteria evaluated on the training set after every epoch')

    p = sub.add_parser('eval', help='evaluate a saved model')
    p.add_argument('--model', required=True)
    _add_data_args(p)
    p.add_argument('--cost', choices=COSTS, default=None,
        help='criterion to report, defaults to the training cost')
    p.add_argument('--all-criteria', action='store_true')
    p.add_argument('--per-iteration', action='store_true')
    p.add_argument('--out', default=None, help='write JSON here instead of stdout')

    p = sub.add_parser('experiment', help='repeated-split protocol')
    _add_experiment_args(p)
    p.add_argument('--curve', action='store_true',
        help='rethink curve run, B defaults to 5')

    p = sub.add_parser('ablate-reweight', help='reweighted vs non-reweighted, paired')
    _add_experiment_args(p)

    p = sub.add_parser('compare-cells', help='srn, gru, lstm and irnn under one protocol')
    _add_experiment_args(p)
    p.add_argument('--cells', nargs='+', choices=CELL_KINDS, default=list(CELL_KINDS))
    p.add_argument('--budget', type=int, default=None,
        help='match every cell to this many trainable parameters')

    p = sub.add_parser('baseline-br', help='binary relevance baseline')
    _add_experiment_args(p)
    p.add_argument('--br-hidden', type=int, default=128)

    p = sub.add_parser('compare-br', help='RethinkNet vs binary relevance, paired')
    _add_experiment_args(p)
    p.add_argument('--br-hidden', type=int, default=128)

    p = sub.add_parser('correlation', help='memory matrix vs label correlation')
    p.add_argument('--model', required=True)
    _add_data_args(p)
    p.add_argument('--out', required=True)

    p = sub.add_parser('report', help='render a report file')
    p.add_argument('--in', dest='inputs', required=True)
    p.add_argument('--format', default='md')
    p.add_argument('--out', default=None)

    p = sub.add_parser('tally', help='win/tie/loss over comparison reports')
    p.add_argument('--in', dest='inputs', nargs='+', required=True)
    p.add_argument('--format', default='md')
    p.add_argument('--out', default=None)
    return parser


# ========= config ============
def _updates(args: argparse.Namespace) -> Dict:
    flags = {
        'task.dataset_path': 'data',
        'task.label_spec': 'labels',
        'model.cost': 'cost',
        'model.cell': 'cell',
        'model.hidden_dim': 'hidden',
        'model.rethink_iterations': 'iters',
        'model.weight_normalization': 'weights',
        'model.recurrent_dropout': 'dropout',
        'model.seed': 'seed',
        'training.max_epochs': 'epochs',
        'training.batch_size': 'batch_size',
        'training.patience': 'patience',
        'training.log_criteria': 'log_criteria',
        'optimizer.lr': 'lr',
        'experiment.repeats': 'repeats',
        'experiment.num_workers': 'threads',
    }
    updates = dict()
    for key, attr in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            updates[key] = value
    if getattr(args, 'format', 'auto') != 'auto' or args.task is None:
        updates['task.format'] = args.format
    if getattr(args, 'no_reweight', False):
        updates['model.reweighted'] = False
    l2 = getattr(args, 'l2', None)
    if l2 is not None:
        if l2 == 'cv':
            updates['l2.select'] = True
        else:
            try:
                updates['model.l2_strength'] = float(l2)
            except ValueError:
                raise UsageError(f"--l2 takes a number or 'cv', got {l2!r}")
            updates['l2.select'] = False
    updates['logging.progress'] = bool(args.progress)
    return updates


def make_config(args: argparse.Namespace, extra: Optional[Dict] = None):
    overrides = [f'task={args.task}'] if getattr(args, 'task', None) else list()
    updates = _updates(args)
    updates.update(extra or dict())
    cfg = compose_config(overrides=overrides, updates=updates)
    OmegaConf.resolve(cfg)
    return cfg


def _write_or_print(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def _load_eval_dataset(args):
    return load_dataset(args.data, fmt=args.format, label_spec=args.labels)


# ========= commands ============
def cmd_train(args) -> int:
    out = pathlib.Path(args.out)
    cfg = make_config(args, {
        'checkpoint.path': str(out),
        'logging.json_log': args.log,
        'output_dir': str(out.absolute().parent),
    })
    workspace = TrainRethinkNetWorkspace(cfg, output_dir=cfg.output_dir)
    workspace.run()
    return EXIT_OK


def cmd_eval(args) -> int:
    workspace = TrainRethinkNetWorkspace.create_from_checkpoint(args.model)
    dataset = _load_eval_dataset(args)
    if args.all_criteria:
        costs = COSTS
    else:
        costs = (args.cost or workspace.model_config.cost,)
    results = workspace.evaluate(dataset, costs)
    output = dict()
    for name, result in results.items():
        output[name] = {'value': result.value}
        if args.per_iteration:
            output[name]['per_iteration'] = result.per_iteration
    _write_or_print(json.dumps(output, sort_keys=True, indent=2) + '\n', args.out)
    return EXIT_OK


_EXPERIMENT_KINDS = {
    'experiment': 'experiment',
    'ablate-reweight': 'reweighting',
    'compare-cells': 'cells',
    'baseline-br': 'br',
    'compare-br': 'compare_br',
}


def cmd_experiment(args) -> int:
    kind = _EXPERIMENT_KINDS[args.command]
    extra = {
        'experiment.kind': kind,
        'experiment.report_path': args.out,
        'output_dir': str(pathlib.Path(args.out).absolute().parent),
    }
    if getattr(args, 'curve', False):
        extra['experiment.kind'] = 'curve'
        if args.iters is not None:
            extra['experiment.curve_iterations'] = args.iters
    if kind == 'cells':
        extra['experiment.cells'] = list(args.cells)
        extra['experiment.parameter_budget'] = args.budget
    if kind in ('br', 'compare_br'):
        extra['experiment.br_hidden_dim'] = args.br_hidden
    cfg = make_config(args, extra)
    workspace = ExperimentWorkspace(cfg, output_dir=cfg.output_dir)
    workspace.run()
    return EXIT_OK


def cmd_correlation(args) -> int:
    workspace = TrainRethinkNetWorkspace.create_from_checkpoint(args.model)
    dataset = _load_eval_dataset(args)
    analysis = export_correlation_analysis(workspace.model, dataset)
    atomic_write_text(args.out,
        json.dumps(analysis.to_dict(), sort_keys=True, indent=2) + '\n')
    if analysis.pearson_r is not None:
        logger.info("off-diagonal agreement r=%.4f (p=%.3g)", analysis.pearson_r, analysis.p_value)
    return EXIT_OK


def cmd_report(args) -> int:
    report = load_report(args.inputs)
    _write_or_print(render_report(report, args.format), args.out)
    return EXIT_OK


def cmd_tally(args) -> int:
    reports = [load_report(path) for path in args.inputs]
    for path, report in zip(args.inputs, reports):
        if not isinstance(report, ComparisonReport) or len(report.tests) == 0:
            raise UsageError(f"{path} is not a paired comparison report")
    _write_or_print(render_tally(tally_table(reports), args.format), args.out)
    return EXIT_OK


COMMANDS = {
    'train': cmd_train,
    'eval': cmd_eval,
    'experiment': cmd_experiment,
    'ablate-reweight': cmd_experiment,
    'compare-cells': cmd_experiment,
    'baseline-br': cmd_experiment,
    'compare-br': cmd_experiment,
    'correlation': cmd_correlation,
    'report': cmd_report,
    'tally': cmd_tally,
}


def exit_code(e: BaseException) -> int:
    if isinstance(e, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(e, (ParseError, SchemaError, SizeError, DimensionError,
            NonFiniteError, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(e, (UsageError, ConfigurationError, ParameterError)):
        return EXIT_USAGE
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return COMMANDS[args.command](args)
    except (RethinkNetError, FileNotFoundError) as e:
        logger.error("%s", e)
        return exit_code(e)


if __name__ == '__main__':
    sys.exit(main())
