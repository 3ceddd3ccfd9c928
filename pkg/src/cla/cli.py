"""Batch command-line front end.

Subcommands: ``synth`` (write a synthetic dataset), ``train`` (fit and save
a model), ``predict`` (initial scores and labels), ``evolve`` (iterative
label refinement), ``evaluate`` (accuracy report from scores and truth),
``tune`` (lambda cross-validation).  Exit codes: 0 success, 1 validation
error, 2 I/O or file-format error.  The ``CLA_LOG`` environment variable
(quiet, info, debug) controls verbosity; numeric log values print with six
significant digits.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, io
from .errors import ClaError, FileFormatError
from .model import (
    LAMBDA_GRID,
    evolve,
    fit_dataset,
)
from .synthetic import SyntheticConfig, generate_synthetic

log = logging.getLogger("cla")

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO,
               "debug": logging.DEBUG}


def _configure_logging():
    level_name = os.environ.get("CLA_LOG", "info").lower()
    level = _LOG_LEVELS.get(level_name, logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s",
                        stream=sys.stderr, force=True)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cla",
        description="Class label autoencoder for zero-shot learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-seen", type=int, default=8)
    p.add_argument("--k-unseen", type=int, default=4)
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--samples", type=int, default=25,
                   help="samples per class")
    p.add_argument("--spaces", type=int, default=2,
                   help="number of semantic spaces")
    p.add_argument("--semantic-dim", type=int, default=6)
    p.add_argument("--sigma", type=float, default=0.0, help="noise level")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="fit the seen-class encoder")
    p.add_argument("--manifest", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--max-alternations", type=int, default=20)
    p.add_argument("--row-normalize", action="store_true")
    p.add_argument("--out", required=True, help="model output path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="initial unseen-class predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--row-normalize", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evolve", help="iterative structure evolution")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--p", type=int, default=50, help="total iterations")
    p.add_argument("--row-normalize", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--scores", required=True, help="score matrix file")
    p.add_argument("--truth", required=True, help="truth label file")
    p.add_argument("--n", type=int, default=1, help="rank cutoff")
    p.add_argument("--out", help="directory for report.txt / report.json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("tune", help="cross-validate lambda on seen classes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--folds", type=int, default=evaluation.DEFAULT_FOLDS)
    p.add_argument("--grid", default=",".join(str(v) for v in LAMBDA_GRID),
                   help="comma-separated lambda values")
    p.add_argument("--row-normalize", action="store_true")
    p.add_argument("--max-alternations", type=int, default=20)
    p.set_defaults(func=_cmd_tune)
    return parser


def _cmd_synth(args):
    config = SyntheticConfig(
        feature_dim=args.feature_dim,
        k_seen=args.k_seen,
        k_unseen=args.k_unseen,
        samples_per_class=args.samples,
        n_spaces=args.spaces,
        semantic_dim=args.semantic_dim,
        noise=args.sigma,
        seed=args.seed,
    )
    dataset = generate_synthetic(config)
    manifest_path = io.save_dataset(dataset, args.out)
    log.info("wrote dataset with %d seen / %d unseen classes to %s",
             dataset.k_seen, dataset.k_unseen, manifest_path)
    print(manifest_path)
    return 0


def _cmd_train(args):
    dataset = io.load_dataset(args.manifest)
    model = fit_dataset(
        dataset,
        lam=args.lam,
        row_normalize=args.row_normalize,
        max_alternations=args.max_alternations,
    )
    io.save_model(model, args.out)
    log.info("final objective %.6g after %d half-steps",
             model.objective_trace[-1], len(model.objective_trace))
    log.info("beta %s", np.array2string(model.beta, precision=6))
    print(args.out)
    return 0


def _run_evolution(args, p_total, delta=0.1):
    dataset = io.load_dataset(args.manifest)
    model = io.load_model(args.model)
    states = evolve(
        model,
        dataset,
        delta=delta,
        p_total=p_total,
        row_normalize=args.row_normalize,
    )
    return dataset, model, states


def _write_prediction(out_dir, state):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.save_matrix(state.score_matrix, out / "scores.clam")
    io.save_labels(state.estimated_labels, out / "labels.csv")
    io.save_matrix(state.gamma[None, :], out / "gamma.csv")
    return out


def _state_accuracy(state, truth):
    report = evaluation.per_class_top_n(state.score_matrix, truth, 1)
    return report.top_n_accuracy[1]


def _cmd_predict(args):
    dataset, _, states = _run_evolution(args, p_total=1)
    out = _write_prediction(args.out, states[0])
    if dataset.unseen_truth is not None:
        log.info("top-1 accuracy %.6g", _state_accuracy(states[0],
                                                        dataset.unseen_truth))
    print(out / "labels.csv")
    return 0


def _cmd_evolve(args):
    dataset, _, states = _run_evolution(args, p_total=args.p,
                                        delta=args.delta)
    out = _write_prediction(args.out, states[-1])
    lines = []
    for state in states:
        fields = [f"iteration={state.iteration}"]
        if dataset.unseen_truth is not None:
            acc = _state_accuracy(state, dataset.unseen_truth)
            fields.append(f"top1_accuracy={acc:.6g}")
            log.info("iteration %d top-1 accuracy %.6g", state.iteration, acc)
        lines.append(" ".join(fields))
    (out / "trace.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(out / "labels.csv")
    return 0


def _cmd_evaluate(args):
    scores = io.load_matrix(args.scores)
    truth = io.load_labels(args.truth)
    report = evaluation.per_class_top_n(
        scores, truth, args.n, config_digest=Path(args.scores).name
    )
    text = evaluation.report_to_text(report)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        (out / "report.json").write_text(
            evaluation.report_to_json(report) + "\n", encoding="utf-8"
        )
    return 0


def _cmd_tune(args):
    dataset = io.load_dataset(args.manifest)
    try:
        grid = tuple(float(v) for v in args.grid.split(",") if v.strip())
    except ValueError:
        log.error("could not parse --grid %r", args.grid)
        return 1
    best, accuracy = evaluation.cross_validate_lambda(
        dataset.seen_features,
        dataset.seen_labels,
        dataset.semantic_spaces,
        dataset.k_seen,
        dataset.k_unseen,
        grid=grid,
        folds=args.folds,
        row_normalize=args.row_normalize,
        max_alternations=args.max_alternations,
    )
    for lam in sorted(accuracy):
        print(f"lambda={lam:.6g} top1_accuracy={accuracy[lam]:.6g}")
    print(f"chosen_lambda={best:.6g}")
    return 0


def run(argv):
    """Parse ``argv`` and execute one subcommand, returning the exit code."""
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the validation exit code
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except FileFormatError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2
    except ClaError as exc:
        log.error("%s", exc)
        return 1


def main():
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
