import argparse
import os
import re
import sys

import numpy as np

# Import modules from our project
from src.data.data_handling import (
    label_scores, read_enroll_map, read_scores, read_trials, read_vectors,
    write_enroll_map, write_scores, write_trials, write_vectors)
from src.data.model_io import load_model, save_model
from src.data.synthetic import SynthSpec, generate, make_trials
from src.models.base_model import ScorerConfig, Variant
from src.models.deplda_model import (
    LocalModel, LocalTrainConfig, MonitorTrials, prepare_training_set, train_local)
from src.models.plda_model import DEFAULT_EM_ITERATIONS, GlobalModel, fit_global
from src.models.preprocess import LdaTransform, LnMode, apply_front_end, fit_front_end
from src.models.scoring import score_trialset
from src.utils.evaluation import compute_eer, roc_frame
from src.utils.exceptions import NumericalError, ScorerConfigError
from src.utils.plotting import plot_roc, plot_training_curve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

FRONT_SUFFIX = '.front'
TRACE_SUFFIX = '.trace.csv'


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting on bad usage"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _epsilon_arg(text):
    try:
        values = [float(tok) for tok in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid epsilon '{text}'") from None
    return values[0] if len(values) == 1 else tuple(values)


def _family_arg(text):
    """'gaussian', or 't<nu>' (e.g. t5) for Student-t residuals"""
    if text == 'gaussian':
        return 'gaussian', None
    match = re.fullmatch(r't(\d+(?:\.\d+)?)', text)
    if not match:
        raise argparse.ArgumentTypeError(f"invalid family '{text}' (use gaussian or t<nu>, e.g. t5)")
    return 'student_t', float(match.group(1))


def build_parser():
    parser = _Parser(prog='deplda', description='PLDA and decoupled PLDA verification back-end')
    commands = parser.add_subparsers(dest='command', metavar='command', parser_class=_Parser)
    commands.required = True

    synth = commands.add_parser('synth', help='Generate synthetic vectors and trials')
    synth.add_argument('--classes', type=int, required=True, help='Number of classes')
    synth.add_argument('--per-class', type=int, required=True, help='Samples per class')
    synth.add_argument('--dim', type=int, required=True, help='Vector dimension')
    synth.add_argument('--epsilon', type=_epsilon_arg, default=1.0,
                       help='Between-class variances, scalar or comma-separated (default: 1)')
    synth.add_argument('--family', type=_family_arg, default=('gaussian', None),
                       help='gaussian or t<nu> for heavy-tailed residuals (default: gaussian)')
    synth.add_argument('--seed', type=int, default=0, help='Random seed')
    synth.add_argument('--prefix', type=str, default='spk', help='Id prefix (default: spk)')
    synth.add_argument('--enroll-per-class', type=int, default=1,
                       help='Enrollment utterances per class (default: 1)')
    synth.add_argument('--targets', type=int, help='Target trials (default: all available)')
    synth.add_argument('--nontargets', type=int, help='Nontarget trials (default: as many as targets)')
    synth.add_argument('--out', type=str, required=True, help='Output directory')

    train_global = commands.add_parser('train-global', help='Train the global PLDA model')
    train_global.add_argument('--vectors', type=str, required=True, help='Labeled training vectors')
    train_global.add_argument('--iters', type=int, default=DEFAULT_EM_ITERATIONS,
                              help=f'EM iterations (default: {DEFAULT_EM_ITERATIONS})')
    train_global.add_argument('--lda-dim', type=int, help='LDA output dimension (default: no LDA)')
    train_global.add_argument('--ln', choices=['none', 'full'], default='none',
                              help='Length-normalize before training (default: none)')
    train_global.add_argument('--whiten', action='store_true',
                              help='Whiten the total covariance after centering/LDA (recommended with --ln)')
    train_global.add_argument('--out', type=str, required=True, help='Output model file')
    train_global.add_argument('--verbose', action='store_true', help='Print EM progress')

    train_local_cmd = commands.add_parser('train-local', help='Train the dePLDA local model')
    train_local_cmd.add_argument('--vectors', type=str, required=True, help='Labeled training vectors')
    train_local_cmd.add_argument('--global', dest='global_model', type=str, required=True,
                                 help='Global model file')
    train_local_cmd.add_argument('--monitor-trials', type=str, required=True, help='Labeled monitor trials')
    train_local_cmd.add_argument('--monitor-enroll', type=str, required=True, help='Monitor enrollment map')
    train_local_cmd.add_argument('--monitor-vectors', type=str,
                                 help='Vectors of the monitor utterances (default: --vectors)')
    train_local_cmd.add_argument('--ln', choices=[m.value for m in LnMode], default='none',
                                 help='Length normalization mode (default: none)')
    train_local_cmd.add_argument('--front', type=str, help='Front-end file (default: <global>.front)')
    train_local_cmd.add_argument('--lr', type=float, default=1e-3, help='Adam learning rate (default: 1e-3)')
    train_local_cmd.add_argument('--max-epochs', type=int, default=100, help='Maximum epochs (default: 100)')
    train_local_cmd.add_argument('--patience', type=int, default=5, help='Early-stop patience (default: 5)')
    train_local_cmd.add_argument('--batch-size', type=int, help='Classes per Adam step (default: full batch)')
    train_local_cmd.add_argument('--seed', type=int, default=0, help='Random seed')
    train_local_cmd.add_argument('--out', type=str, required=True, help='Output model file')
    train_local_cmd.add_argument('--verbose', action='store_true', help='Print per-epoch progress')

    score = commands.add_parser('score', help='Score a trial list')
    score.add_argument('--global', dest='global_model', type=str, required=True, help='Global model file')
    score.add_argument('--local', type=str, help='Local model file (selects dePLDA)')
    score.add_argument('--ln', choices=[m.value for m in LnMode], default='none',
                       help='Length normalization mode (default: none)')
    score.add_argument('--front', type=str, help='Front-end file (default: <global>.front)')
    score.add_argument('--enroll-map', type=str, required=True, help='Enrollment map')
    score.add_argument('--enroll-vectors', type=str, required=True, help='Enrollment vectors')
    score.add_argument('--test-vectors', type=str, required=True, help='Test vectors')
    score.add_argument('--trials', type=str, required=True, help='Trial list')
    score.add_argument('--out', type=str, required=True, help='Output score file')
    score.add_argument('--verbose', action='store_true', help='Print a scoring summary')

    eer = commands.add_parser('eer', help='Equal error rate of a score file')
    eer.add_argument('--scores', type=str, required=True, help='Score file')
    eer.add_argument('--trials', type=str, required=True, help='Labeled trial list')
    eer.add_argument('--roc', type=str, help='Write ROC points as CSV')
    eer.add_argument('--roc-plot', type=str, help='Save a miss vs false-alarm figure')

    history = commands.add_parser('history', help='Show the training history of a local model')
    history.add_argument('--model', type=str, required=True, help='Local model file')
    history.add_argument('--csv', type=str, help='Write the history as CSV')
    history.add_argument('--plot', type=str, help='Save the training curve figure')

    return parser


def _load(path, expected, what):
    model = load_model(path)
    if not isinstance(model, expected):
        raise ValueError(f"{path}: not a {what} file")
    return model


def _load_front(args):
    """Front-end from --front, else <global>.front when it exists"""
    path = args.front
    if path is None:
        path = args.global_model + FRONT_SUFFIX
        if not os.path.exists(path):
            return None
    return _load(path, LdaTransform, 'front-end')


def run_synth(args):
    family, nu = args.family
    spec = SynthSpec(args.classes, args.per_class, args.dim, args.epsilon, family=family,
                     nu=nu if nu is not None else 5.0, seed=args.seed, prefix=args.prefix)
    vector_set = generate(spec)

    available = len(vector_set) - vector_set.num_classes * args.enroll_per_class
    targets = available if args.targets is None else args.targets
    nontargets = args.nontargets
    if nontargets is None:
        nontargets = min(targets, max(available, 0) * (vector_set.num_classes - 1))
    enroll_map, trials, test_side = make_trials(
        vector_set, args.enroll_per_class, targets, nontargets, seed=args.seed)

    os.makedirs(args.out, exist_ok=True)
    write_vectors(vector_set, os.path.join(args.out, 'vectors.txt'))
    write_enroll_map(enroll_map, os.path.join(args.out, 'enroll.map'))
    write_vectors(test_side, os.path.join(args.out, 'test_vectors.txt'))
    write_trials(trials, os.path.join(args.out, 'trials.txt'))
    print(f"Generated {len(vector_set)} vectors ({vector_set.num_classes} classes, dimension {spec.dim}), "
          f"{len(trials)} trials in {args.out}")
    return EXIT_OK


def run_train_global(args):
    vector_set = read_vectors(args.vectors)
    front = fit_front_end(vector_set, args.lda_dim, whiten=args.whiten)
    processed = apply_front_end(vector_set, front, normalize=args.ln == 'full')
    model, trace = fit_global(processed, iterations=args.iters, verbose=args.verbose)

    save_model(model, args.out)
    save_model(front, args.out + FRONT_SUFFIX)
    trace.to_csv(args.out + TRACE_SUFFIX)
    print(f"Global model saved to {args.out} (dimension {model.dim})")
    print(f"epsilon: {' '.join(f'{e:.6g}' for e in model.epsilon)}")
    if len(trace):
        print(f"Final log-likelihood: {trace.log_likelihoods[-1]:.6f}")
    return EXIT_OK


def run_train_local(args):
    global_model = _load(args.global_model, GlobalModel, 'global model')
    front = _load_front(args)
    ln_mode = LnMode(args.ln)
    config = LocalTrainConfig(learning_rate=args.lr, max_epochs=args.max_epochs, patience=args.patience,
                              batch_size=args.batch_size, seed=args.seed)

    vector_set = read_vectors(args.vectors)
    monitor_vectors = vector_set if args.monitor_vectors is None else read_vectors(args.monitor_vectors)
    monitor = MonitorTrials(read_trials(args.monitor_trials), monitor_vectors,
                            read_enroll_map(args.monitor_enroll))

    train_set, prediction_set = prepare_training_set(global_model, vector_set, ln_mode, front)
    model, history = train_local(global_model, train_set, monitor, config=config, ln_mode=ln_mode,
                                 front=front, prediction_set=prediction_set, verbose=args.verbose)
    save_model(model, args.out)
    print(f"Local model saved to {args.out}: best epoch {model.best_epoch} of {len(history)}, "
          f"monitor EER {100 * model.monitor_eer_at_best:.3f}%")
    return EXIT_OK


def run_score(args):
    global_model = _load(args.global_model, GlobalModel, 'global model')
    local_model = None if args.local is None else _load(args.local, LocalModel, 'local model')
    variant = Variant.PLDA if local_model is None else Variant.DEPLDA
    config = ScorerConfig(variant, args.ln, global_model, local_model, _load_front(args))

    enroll_map = read_enroll_map(args.enroll_map)
    enroll_vectors = read_vectors(args.enroll_vectors)
    test_vectors = read_vectors(args.test_vectors)
    trials = read_trials(args.trials)
    scored = score_trialset(config, enroll_map, enroll_vectors, test_vectors, trials, verbose=args.verbose)
    write_scores(scored, args.out)
    print(f"Wrote {len(scored)} {variant.value} scores to {args.out}")
    return EXIT_OK


def run_eer(args):
    scored = label_scores(read_scores(args.scores), read_trials(args.trials))
    result = compute_eer(scored)
    print(f"EER {result.percent:.3f}")
    if args.roc or args.roc_plot:
        roc = roc_frame(scored)
        if args.roc:
            roc.to_csv(args.roc, index=False)
        if args.roc_plot:
            plot_roc(roc, args.roc_plot)
    return EXIT_OK


def run_history(args):
    model = _load(args.model, LocalModel, 'local model')
    if model.history is None:
        raise ValueError(f"{args.model}: model has no training history")
    model.history.print_summary()
    if args.csv:
        model.history.to_csv(args.csv)
    if args.plot:
        plot_training_curve(model.history, args.plot)
    return EXIT_OK


COMMANDS = {
    'synth': run_synth,
    'train-global': run_train_global,
    'train-local': run_train_local,
    'score': run_score,
    'eer': run_eer,
    'history': run_history,
}


def run(argv):
    """Run one subcommand and return the process exit status"""
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (UsageError, ScorerConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError) as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
