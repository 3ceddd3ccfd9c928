"""Encoder training, unseen-class scoring, and structure evolution.

Training minimizes the label-autoencoder objective

    ||X - A' W Y||_F^2 + lambda ||W' A X - Y||_F^2

over the encoder A for a fused seen-class structure W.  Setting the
derivative to zero yields a Sylvester equation in W'A (solved with the
Bartels-Stewart routine from :mod:`cla.linalg`), after which A is recovered
by a mildly regularized least-squares solve through W.  The fusion weights
over structure sources are optimized in alternation with A, and unseen-class
predictions are refined by the evolution loop: estimate labels, rebuild
visual prototypes from them, re-weight the unseen structures, and repeat
until the label assignment stops changing.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import ZslDataset
from .errors import (
    DimensionError,
    NumericError,
    SingularMatrixError,
    TrainingError,
    ValidationError,
)
from .linalg import as_matrix, ridge_solve, solve_sylvester
from .simplex import minimize_quadratic_on_simplex
from .structures import (
    ClassPrototypes,
    FusionWeights,
    StructureSet,
    build_semantic_structures,
    build_visual_structures,
    class_prototypes,
)

__all__ = [
    "ClaModel",
    "EvolutionState",
    "one_hot_labels",
    "train_a_s",
    "seen_objective",
    "optimize_beta",
    "fit_seen",
    "build_training_sources",
    "fit_dataset",
    "predict_scores",
    "predict_labels",
    "update_gamma",
    "evolve",
    "reconstruction_diagnostics",
]

# ridge used when recovering the encoder from the Sylvester solution
ENCODER_RECOVERY_RIDGE = 1e-8
# relative objective decrease below which the alternation stops
ALTERNATION_TOLERANCE = 1e-8
LAMBDA_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0)
VISUAL_SOURCE_NAME = "visual"


@dataclass(frozen=True)
class ClaModel:
    """Trained seen-class encoder plus the fused structure it was trained on.

    ``objective_trace`` is a fitting diagnostic (one value per half-step of
    the alternation) and is not part of the persisted model.
    """

    a_s: np.ndarray
    fused_w_s: np.ndarray
    lam: float
    source_names: tuple
    beta: np.ndarray
    objective_trace: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class EvolutionState:
    """Snapshot of one evolution iteration."""

    iteration: int
    estimated_labels: np.ndarray
    gamma: np.ndarray
    visual_structures: StructureSet
    score_matrix: np.ndarray


def one_hot_labels(labels, k):
    """One-hot label matrix, shape (k, n), exactly one 1 per column."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionError("labels must be 1-D")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValidationError(f"labels must lie in [0, {k})")
    y = np.zeros((k, labels.size))
    y[labels, np.arange(labels.size)] = 1.0
    return y


def _validate_one_hot(y):
    y = as_matrix(y, "y")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("label matrix entries must be 0 or 1")
    if not np.all(y.sum(axis=0) == 1.0):
        raise ValidationError("each label column must contain exactly one 1")
    return y


def train_a_s(x_s, y_s, w_s, lam):
    """Train the seen-class encoder for a fixed fused structure w_s.

    Solves the stationarity condition (Y Y') W + W (lambda X X') =
    (1+lambda) Y X' for W = w_s' a_s via Bartels-Stewart, then recovers
    a_s by a regularized least-squares solve through w_s.
    """
    x_s = as_matrix(x_s, "x_s")
    y_s = _validate_one_hot(y_s)
    w_s = as_matrix(w_s, "w_s")
    k_s = y_s.shape[0]
    if x_s.shape[1] != y_s.shape[1]:
        raise DimensionError(
            f"x_s has {x_s.shape[1]} samples but y_s has {y_s.shape[1]}"
        )
    if w_s.shape != (k_s, k_s):
        raise DimensionError(f"w_s must be ({k_s}, {k_s}), got {w_s.shape}")
    if lam <= 0.0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    counts = y_s.sum(axis=1)
    if counts.min() == 0.0:
        empty = int(np.argmin(counts))
        raise ValidationError(f"seen class {empty} has no samples")
    a = y_s @ y_s.T
    b = lam * (x_s @ x_s.T)
    c = (1.0 + lam) * (y_s @ x_s.T)
    try:
        w = solve_sylvester(a, b, c)
    except SingularMatrixError as exc:
        raise TrainingError(
            f"encoder training is singular at lambda={lam:g}; try another "
            f"value from the grid {LAMBDA_GRID}: {exc}"
        ) from exc
    gram = w_s @ w_s.T
    eps = ENCODER_RECOVERY_RIDGE * float(np.trace(gram)) / k_s
    return ridge_solve(gram, w_s @ w, eps)


def seen_objective(x_s, y_s, w_s, a_s, lam):
    """Value of the training objective at (a_s, w_s)."""
    q = w_s.T @ a_s
    decoder = x_s - q.T @ y_s
    encoder = q @ x_s - y_s
    return float(np.sum(decoder * decoder) + lam * np.sum(encoder * encoder))


def optimize_beta(x_s, y_s, structure_sources, a_s, lam):
    """Optimal seen-structure weights for a fixed encoder.

    The objective is quadratic in beta because the fused structure is
    linear in it; the simplex-constrained program is solved by projected
    gradient (see :mod:`cla.simplex`).  The returned weights never score
    worse than the uniform initialization.
    """
    x_s = as_matrix(x_s, "x_s")
    y_s = _validate_one_hot(y_s)
    n = len(structure_sources)
    if n == 0:
        raise ValidationError("need at least one structure source")
    if n == 1:
        return np.ones(1)
    # decoder term X ~ sum_i beta_i U_i, encoder term Y ~ sum_i beta_i V_i
    u = [a_s.T @ s.w_s @ y_s for s in structure_sources]
    v = [s.w_s.T @ a_s @ x_s for s in structure_sources]
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = np.sum(u[i] * u[j]) + lam * np.sum(v[i] * v[j])
            gram[j, i] = gram[i, j]
    h = np.array(
        [np.sum(x_s * ui) + lam * np.sum(y_s * vi) for ui, vi in zip(u, v)]
    )
    if not np.all(np.isfinite(gram)) or not np.all(np.isfinite(h)):
        raise NumericError("beta objective has non-finite coefficients")
    return minimize_quadratic_on_simplex(2.0 * gram, -2.0 * h)


def _fuse_seen(structure_sources, beta):
    return sum(b * s.w_s for b, s in zip(beta, structure_sources))


def fit_seen(x_s, y_s, structure_sources, lam=1.0, max_alternations=20):
    """Alternating optimization of the encoder and the seen fusion weights.

    Starts from uniform beta, alternates :func:`train_a_s` and
    :func:`optimize_beta`, and stops once the objective decreases by less
    than 1e-8 relative (or after ``max_alternations`` rounds).  The
    recorded objective trace is non-increasing up to solver slack.
    """
    if max_alternations < 1:
        raise ValidationError("max_alternations must be >= 1")
    n = len(structure_sources)
    if n == 0:
        raise ValidationError("need at least one structure source")
    beta = np.full(n, 1.0 / n)
    trace = []
    a_s = None
    a_s_beta = None
    prev = None
    for _ in range(max_alternations):
        w_s = _fuse_seen(structure_sources, beta)
        a_s = train_a_s(x_s, y_s, w_s, lam)
        a_s_beta = beta
        trace.append(seen_objective(x_s, y_s, w_s, a_s, lam))
        beta = optimize_beta(x_s, y_s, structure_sources, a_s, lam)
        w_s = _fuse_seen(structure_sources, beta)
        current = seen_objective(x_s, y_s, w_s, a_s, lam)
        trace.append(current)
        if prev is not None and prev - current <= ALTERNATION_TOLERANCE * max(
            1.0, abs(prev)
        ):
            break
        prev = current
    if not np.array_equal(beta, a_s_beta):
        # retrain so the stored encoder matches the final fused structure
        w_s = _fuse_seen(structure_sources, beta)
        a_s = train_a_s(x_s, y_s, w_s, lam)
        trace.append(seen_objective(x_s, y_s, w_s, a_s, lam))
    else:
        w_s = _fuse_seen(structure_sources, beta)
    return ClaModel(
        a_s=a_s,
        fused_w_s=w_s,
        lam=float(lam),
        source_names=tuple(s.source_name for s in structure_sources),
        beta=beta,
        objective_trace=tuple(trace),
    )


def build_training_sources(dataset: ZslDataset, row_normalize=False):
    """Structure sources for training: M semantic spaces plus the visual
    source (whose unseen structures start as zero placeholders)."""
    k_u = dataset.k_unseen
    sources = [
        build_semantic_structures(
            ClassPrototypes(
                space_name=space.name,
                seen=as_matrix(space.seen, "seen prototypes"),
                unseen=as_matrix(space.unseen, "unseen prototypes"),
                availability_mask=np.ones(k_u, dtype=bool),
            ),
            row_normalize,
        )
        for space in dataset.semantic_spaces
    ]
    seen_protos, mask = class_prototypes(
        dataset.seen_features, dataset.seen_labels, dataset.k_seen
    )
    if not mask.all():
        raise ValidationError("every seen class needs at least one sample")
    sources.append(
        build_visual_structures(
            ClassPrototypes(
                space_name=VISUAL_SOURCE_NAME,
                seen=seen_protos,
                unseen=np.zeros((dataset.feature_dim, k_u)),
                availability_mask=np.zeros(k_u, dtype=bool),
            ),
            row_normalize,
        )
    )
    return sources


def fit_dataset(dataset: ZslDataset, lam=1.0, row_normalize=False,
                max_alternations=20):
    """Train a model on a dataset's seen classes (all M+1 sources)."""
    sources = build_training_sources(dataset, row_normalize)
    y_s = one_hot_labels(dataset.seen_labels, dataset.k_seen)
    return fit_seen(
        dataset.seen_features, y_s, sources, lam=lam,
        max_alternations=max_alternations,
    )


def predict_scores(model, w_u, w_su, x_u):
    """Unseen-class score matrix w_u' w_su' a_s x_u, shape (k_u, n_u)."""
    w_u = as_matrix(w_u, "w_u")
    w_su = as_matrix(w_su, "w_su")
    x_u = as_matrix(x_u, "x_u")
    k_s, d = model.a_s.shape
    k_u = w_u.shape[0]
    if w_u.shape != (k_u, k_u):
        raise DimensionError(f"w_u must be square, got {w_u.shape}")
    if w_su.shape != (k_s, k_u):
        raise DimensionError(
            f"w_su must be ({k_s}, {k_u}), got {w_su.shape}"
        )
    if x_u.shape[0] != d:
        raise DimensionError(
            f"x_u must have {d} rows to match the encoder, got {x_u.shape[0]}"
        )
    return w_u.T @ (w_su.T @ (model.a_s @ x_u))


def predict_labels(scores):
    """Per-column argmax of the scores; ties go to the lowest class index."""
    scores = as_matrix(scores, "scores")
    if scores.shape[1] < 1:
        raise DimensionError("need at least one sample column")
    return scores.argmax(axis=0)


def update_gamma(structure_sources, delta):
    """Optimal unseen-structure weights by agreement with the visual source.

    Each source's w_u is flattened into a row of P_u (the visual source,
    always last, enters negated) and likewise w_su into P_su; the weights
    minimize ||gamma' P_u||^2 + delta ||gamma' P_su||^2 on the simplex.
    All-zero P matrices make the objective degenerate, in which case the
    uniform weights are returned.
    """
    if delta < 0.0:
        raise ValidationError(f"delta must be nonnegative, got {delta}")
    n = len(structure_sources)
    if n == 0:
        raise ValidationError("need at least one structure source")
    if n == 1:
        return np.ones(1)
    signs = np.ones(n)
    signs[-1] = -1.0
    p_u = np.stack([sg * s.w_u.ravel() for sg, s in zip(signs, structure_sources)])
    p_su = np.stack(
        [sg * s.w_su.ravel() for sg, s in zip(signs, structure_sources)]
    )
    quad = p_u @ p_u.T + delta * (p_su @ p_su.T)
    if np.all(quad == 0.0):
        return np.full(n, 1.0 / n)
    return minimize_quadratic_on_simplex(2.0 * quad)


def _fuse_unseen(structure_sources, gamma):
    w_u = sum(g * s.w_u for g, s in zip(gamma, structure_sources))
    w_su = sum(g * s.w_su for g, s in zip(gamma, structure_sources))
    return w_u, w_su


def evolve(
    model,
    dataset: ZslDataset,
    delta=0.1,
    p_total=50,
    row_normalize=False,
    stop_on_fixed_point=True,
):
    """Iterative refinement of unseen-class labels (structure evolution).

    Iteration 0 scores the unseen samples with the semantic structures
    only (the visual unseen structures start as zero placeholders and the
    fusion weights as uniform).  Every later iteration rebuilds the visual
    unseen prototypes from the current label estimate, re-optimizes gamma,
    re-fuses the structures, and re-estimates the labels.  The loop is a
    deterministic map of the label vector, so an unchanged assignment is a
    fixed point; by default the loop halts there.

    Returns the full list of :class:`EvolutionState`, ``p_total`` entries
    at most.
    """
    if p_total < 1:
        raise ValidationError(f"p_total must be >= 1, got {p_total}")
    expected = dataset.space_names + (VISUAL_SOURCE_NAME,)
    if tuple(model.source_names) != expected:
        raise ValidationError(
            f"model sources {model.source_names} do not match dataset "
            f"spaces {expected}"
        )
    k_u = dataset.k_unseen
    x_u = dataset.unseen_features
    n_sources = len(expected)

    semantic = [
        build_semantic_structures(
            ClassPrototypes(
                space_name=space.name,
                seen=as_matrix(space.seen, "seen prototypes"),
                unseen=as_matrix(space.unseen, "unseen prototypes"),
                availability_mask=np.ones(k_u, dtype=bool),
            ),
            row_normalize,
        )
        for space in dataset.semantic_spaces
    ]
    seen_protos, seen_mask = class_prototypes(
        dataset.seen_features, dataset.seen_labels, dataset.k_seen
    )
    if not seen_mask.all():
        raise ValidationError("every seen class needs at least one sample")

    def visual_from(unseen_protos, mask):
        return build_visual_structures(
            ClassPrototypes(
                space_name=VISUAL_SOURCE_NAME,
                seen=seen_protos,
                unseen=unseen_protos,
                availability_mask=mask,
            ),
            row_normalize,
        )

    visual = visual_from(
        np.zeros((dataset.feature_dim, k_u)), np.zeros(k_u, dtype=bool)
    )
    gamma = np.full(n_sources, 1.0 / n_sources)
    w_u, w_su = _fuse_unseen(semantic + [visual], gamma)
    scores = predict_scores(model, w_u, w_su, x_u)
    labels = predict_labels(scores)
    states = [
        EvolutionState(
            iteration=0,
            estimated_labels=labels,
            gamma=gamma,
            visual_structures=visual,
            score_matrix=scores,
        )
    ]
    for t in range(1, p_total):
        unseen_protos, mask = class_prototypes(x_u, labels, k_u)
        visual = visual_from(unseen_protos, mask)
        sources = semantic + [visual]
        gamma = update_gamma(sources, delta)
        w_u, w_su = _fuse_unseen(sources, gamma)
        scores = predict_scores(model, w_u, w_su, x_u)
        new_labels = predict_labels(scores)
        states.append(
            EvolutionState(
                iteration=t,
                estimated_labels=new_labels,
                gamma=gamma,
                visual_structures=visual,
                score_matrix=scores,
            )
        )
        if stop_on_fixed_point and np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return states


def reconstruction_diagnostics(model, x, y):
    """The two reconstruction terms of the autoencoder objective.

    Returns (decoder_loss, encoder_loss) = (||x - Q'y||^2, ||Qx - y||^2)
    for Q = fused_w_s' a_s, without the lambda weighting.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    q = model.fused_w_s.T @ model.a_s
    if x.shape[0] != q.shape[1] or y.shape[0] != q.shape[0]:
        raise DimensionError(
            f"x/y shapes {x.shape}/{y.shape} do not match encoder {q.shape}"
        )
    if x.shape[1] != y.shape[1]:
        raise DimensionError("x and y must have the same number of columns")
    decoder = x - q.T @ y
    encoder = q @ x - y
    return float(np.sum(decoder * decoder)), float(np.sum(encoder * encoder))
