"""Average per-class Top-n accuracy and lambda cross-validation.

The headline metric is the unweighted mean over test classes of the
fraction of samples whose true class ranks among the top n scores.
Cross-validation splits the SEEN CLASSES (never samples) into
pseudo-seen/pseudo-unseen folds sized by the dataset's seen:unseen class
ratio, mimicking the zero-shot condition inside the training set.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError
from .linalg import as_matrix
from .model import LAMBDA_GRID, fit_seen, one_hot_labels, predict_scores
from .structures import (
    ClassPrototypes,
    build_semantic_structures,
    build_visual_structures,
    class_prototypes,
)

__all__ = [
    "EvaluationReport",
    "per_class_top_n",
    "cross_validate_lambda",
    "report_to_text",
    "report_to_json",
]

DEFAULT_FOLDS = 5
MAX_REPORTED_RANK = 5


@dataclass(frozen=True)
class EvaluationReport:
    """Per-class accuracy summary for one score matrix.

    ``top_n_accuracy`` maps each evaluated rank to the headline percentage;
    ``per_class_accuracy`` holds the rank-n accuracy per class (NaN for
    classes without test samples, which are listed in ``missing_classes``
    and excluded from the headline mean).
    """

    top_n_accuracy: dict
    per_class_accuracy: np.ndarray
    n_samples: int
    config_digest: str
    missing_classes: tuple = field(default=())

    @property
    def headline(self):
        return self.top_n_accuracy[max(self.top_n_accuracy)]


def per_class_top_n(scores, truth, n, config_digest=""):
    """Average per-class Top-n accuracy of a score matrix.

    A sample counts as correct when its true class is among the ``n``
    highest-scoring classes, ties resolved toward lower class indices.
    Ranks 1..min(5, k_u) are always reported alongside the requested ``n``.
    """
    scores = as_matrix(scores, "scores")
    truth = np.asarray(truth)
    k_u, n_samples = scores.shape
    if not 1 <= n <= k_u:
        raise ValidationError(f"rank cutoff must lie in [1, {k_u}], got {n}")
    if truth.shape != (n_samples,):
        raise DimensionError("truth must have one label per score column")
    if n_samples == 0:
        raise DimensionError("need at least one sample")
    if truth.min() < 0 or truth.max() >= k_u:
        raise ValidationError(f"truth labels must lie in [0, {k_u})")

    # stable argsort on negated scores ranks ties by lower class index
    order = np.argsort(-scores, axis=0, kind="stable")
    rank_of_truth = np.empty(n_samples, dtype=np.int64)
    for j in range(n_samples):
        rank_of_truth[j] = int(np.nonzero(order[:, j] == truth[j])[0][0])

    ranks = sorted(set(range(1, min(MAX_REPORTED_RANK, k_u) + 1)) | {n})
    counts = np.bincount(truth, minlength=k_u)
    present = counts > 0
    missing = tuple(int(c) for c in np.flatnonzero(~present))

    top_n = {}
    per_class_at_n = np.full(k_u, np.nan)
    for m in ranks:
        correct = rank_of_truth < m
        per_class = np.full(k_u, np.nan)
        for c in np.flatnonzero(present):
            per_class[c] = 100.0 * correct[truth == c].mean()
        top_n[m] = float(np.mean(per_class[present]))
        if m == n:
            per_class_at_n = per_class
    return EvaluationReport(
        top_n_accuracy=top_n,
        per_class_accuracy=per_class_at_n,
        n_samples=n_samples,
        config_digest=config_digest,
        missing_classes=missing,
    )


def _fold_splits(k_seen, k_unseen, folds):
    """Pseudo-unseen class blocks, one per fold, ratio-matched to the task."""
    n_pseudo = int(round(k_seen * k_unseen / (k_seen + k_unseen)))
    n_pseudo = max(1, min(n_pseudo, k_seen - 1))
    splits = []
    for f in range(folds):
        block = (f * n_pseudo + np.arange(n_pseudo)) % k_seen
        splits.append(np.unique(block))
    return splits


def cross_validate_lambda(
    x_s,
    seen_labels,
    semantic_spaces,
    k_seen,
    k_unseen,
    grid=LAMBDA_GRID,
    folds=DEFAULT_FOLDS,
    row_normalize=False,
    max_alternations=20,
):
    """Pick the tradeoff parameter by class-level cross-validation.

    The seen classes are alternately segmented into pseudo-seen and
    pseudo-unseen blocks (sized by the seen:unseen ratio).  Each grid value
    trains on the pseudo-seen classes and scores Top-1 accuracy on the
    pseudo-unseen ones; the value with the best mean accuracy wins, ties
    broken toward the smaller lambda.

    Returns (best_lambda, {lambda: mean_accuracy}).
    """
    if folds < 2:
        raise ValidationError(f"folds must be >= 2, got {folds}")
    if k_seen < folds:
        raise ValidationError(
            f"cannot split {k_seen} seen classes into {folds} folds"
        )
    if len(grid) == 0:
        raise ValidationError("lambda grid is empty")
    x_s = as_matrix(x_s, "x_s")
    seen_labels = np.asarray(seen_labels)
    splits = _fold_splits(k_seen, k_unseen, folds)

    fold_accuracy = {lam: [] for lam in grid}
    for pseudo_unseen in splits:
        is_pu = np.zeros(k_seen, dtype=bool)
        is_pu[pseudo_unseen] = True
        pseudo_seen = np.flatnonzero(~is_pu)
        # relabel classes to compact 0..k-1 ranges per side
        seen_pos = {c: i for i, c in enumerate(pseudo_seen)}
        unseen_pos = {c: i for i, c in enumerate(pseudo_unseen)}
        train_mask = ~is_pu[seen_labels]
        x_train = x_s[:, train_mask]
        y_train_labels = np.array(
            [seen_pos[c] for c in seen_labels[train_mask]]
        )
        x_val = x_s[:, ~train_mask]
        truth_val = np.array([unseen_pos[c] for c in seen_labels[~train_mask]])

        k_ps, k_pu = pseudo_seen.size, pseudo_unseen.size
        semantic = [
            build_semantic_structures(
                ClassPrototypes(
                    space_name=space.name,
                    seen=as_matrix(space.seen, "seen")[:, pseudo_seen],
                    unseen=as_matrix(space.seen, "seen")[:, pseudo_unseen],
                    availability_mask=np.ones(k_pu, dtype=bool),
                ),
                row_normalize,
            )
            for space in semantic_spaces
        ]
        seen_protos, proto_mask = class_prototypes(
            x_train, y_train_labels, k_ps
        )
        if not proto_mask.all():
            raise ValidationError(
                "a pseudo-seen class has no samples; use fewer folds"
            )
        visual = build_visual_structures(
            ClassPrototypes(
                space_name="visual",
                seen=seen_protos,
                unseen=np.zeros((x_s.shape[0], k_pu)),
                availability_mask=np.zeros(k_pu, dtype=bool),
            ),
            row_normalize,
        )
        sources = semantic + [visual]
        y_train = one_hot_labels(y_train_labels, k_ps)
        gamma = np.full(len(sources), 1.0 / len(sources))
        for lam in grid:
            model = fit_seen(
                x_train, y_train, sources, lam=lam,
                max_alternations=max_alternations,
            )
            w_u = sum(g * s.w_u for g, s in zip(gamma, sources))
            w_su = sum(g * s.w_su for g, s in zip(gamma, sources))
            scores = predict_scores(model, w_u, w_su, x_val)
            report = per_class_top_n(scores, truth_val, 1)
            fold_accuracy[lam].append(report.top_n_accuracy[1])

    mean_accuracy = {lam: float(np.mean(v)) for lam, v in fold_accuracy.items()}
    best = None
    for lam in sorted(grid):
        if best is None or mean_accuracy[lam] > mean_accuracy[best]:
            best = lam
    return best, mean_accuracy


def report_to_text(report):
    """Line-oriented key=value rendering of a report."""
    lines = [
        f"n_samples={report.n_samples}",
        f"config_digest={report.config_digest}",
    ]
    for n in sorted(report.top_n_accuracy):
        lines.append(f"top{n}_accuracy={report.top_n_accuracy[n]:.6g}")
    for c, acc in enumerate(report.per_class_accuracy):
        value = "absent" if np.isnan(acc) else f"{acc:.6g}"
        lines.append(f"class{c}_accuracy={value}")
    if report.missing_classes:
        lines.append(
            "missing_classes=" + ",".join(str(c) for c in report.missing_classes)
        )
    return "\n".join(lines) + "\n"


def report_to_json(report):
    """Machine-readable JSON rendering of a report."""
    return json.dumps(
        {
            "n_samples": report.n_samples,
            "config_digest": report.config_digest,
            "top_n_accuracy": {
                str(n): report.top_n_accuracy[n]
                for n in sorted(report.top_n_accuracy)
            },
            "per_class_accuracy": [
                None if np.isnan(a) else a for a in report.per_class_accuracy
            ],
            "missing_classes": list(report.missing_classes),
        },
        indent=2,
        sort_keys=True,
    )
