"""In-memory zero-shot dataset container."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError
from .linalg import as_matrix

__all__ = ["SemanticSpace", "ZslDataset"]


@dataclass(frozen=True)
class SemanticSpace:
    """One semantic embedding space: a prototype column per class."""

    name: str
    seen: np.ndarray
    unseen: np.ndarray


@dataclass(frozen=True)
class ZslDataset:
    """Seen features with labels, unseen features, and M semantic spaces.

    ``unseen_truth`` is optional and only used for evaluation, never for
    training or label estimation.
    """

    seen_features: np.ndarray
    seen_labels: np.ndarray
    unseen_features: np.ndarray
    semantic_spaces: tuple
    k_seen: int
    k_unseen: int
    unseen_truth: np.ndarray | None = field(default=None)

    def __post_init__(self):
        x_s = as_matrix(self.seen_features, "seen_features")
        x_u = as_matrix(self.unseen_features, "unseen_features")
        if x_s.shape[0] != x_u.shape[0]:
            raise DimensionError(
                f"seen and unseen features disagree on dimension: "
                f"{x_s.shape[0]} vs {x_u.shape[0]}"
            )
        labels = np.asarray(self.seen_labels)
        if labels.shape != (x_s.shape[1],):
            raise DimensionError("seen_labels must have one entry per column")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k_seen):
            raise ValidationError(
                f"seen labels must lie in [0, {self.k_seen})"
            )
        if len(self.semantic_spaces) < 1:
            raise ValidationError("need at least one semantic space")
        for space in self.semantic_spaces:
            if space.seen.shape[1] != self.k_seen:
                raise DimensionError(
                    f"semantic space '{space.name}' has {space.seen.shape[1]} "
                    f"seen columns, expected {self.k_seen}"
                )
            if space.unseen.shape[1] != self.k_unseen:
                raise DimensionError(
                    f"semantic space '{space.name}' has {space.unseen.shape[1]} "
                    f"unseen columns, expected {self.k_unseen}"
                )
            if space.seen.shape[0] != space.unseen.shape[0]:
                raise DimensionError(
                    f"semantic space '{space.name}' seen/unseen dimension "
                    "mismatch"
                )
        if self.unseen_truth is not None:
            truth = np.asarray(self.unseen_truth)
            if truth.shape != (x_u.shape[1],):
                raise DimensionError(
                    "unseen_truth must have one entry per unseen column"
                )
            if truth.size and (truth.min() < 0 or truth.max() >= self.k_unseen):
                raise ValidationError(
                    f"unseen truth labels must lie in [0, {self.k_unseen})"
                )

    @property
    def feature_dim(self):
        return self.seen_features.shape[0]

    @property
    def space_names(self):
        return tuple(space.name for space in self.semantic_spaces)
