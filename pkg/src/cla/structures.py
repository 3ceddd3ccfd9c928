"""Class-structure graphs: prototypes, Gaussian-of-Mahalanobis similarity
matrices, and convex fusion of multiple structure sources.

Every structure source (a semantic embedding space, or the visual-prototype
source) yields three matrices: within-seen ``w_s`` (k_s x k_s), within-unseen
``w_u`` (k_u x k_u), and cross ``w_su`` (k_s x k_u).  Entries are
exp(-d(z_i, z_j)) for the Mahalanobis distance d under the source's own
prototype covariance, normalized so each matrix sums to 1 (or each row, when
``row_normalize`` is on).  Unseen classes without an assigned prototype are
masked out of the visual source; when none is assigned yet, ``w_u`` and
``w_su`` are all-zero placeholders.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError, ValidationError
from .linalg import as_matrix, covariance

__all__ = [
    "ClassPrototypes",
    "StructureSet",
    "FusionWeights",
    "class_prototypes",
    "similarity_matrix",
    "regularized_inverse_covariance",
    "build_semantic_structures",
    "build_visual_structures",
    "fuse_structures",
]

COVARIANCE_RIDGE = 1e-6
SIMPLEX_SUM_TOL = 1e-10
SIMPLEX_NEG_TOL = -1e-12


@dataclass(frozen=True)
class ClassPrototypes:
    """One prototype vector per class for a single structure source.

    ``seen`` is dim x k_s, ``unseen`` is dim x k_u; ``availability_mask``
    marks which unseen prototypes are defined (undefined columns are zero).
    """

    space_name: str
    seen: np.ndarray
    unseen: np.ndarray
    availability_mask: np.ndarray

    def __post_init__(self):
        if self.seen.shape[0] != self.unseen.shape[0]:
            raise DimensionError(
                f"seen and unseen prototypes of '{self.space_name}' disagree on "
                f"dimension: {self.seen.shape[0]} vs {self.unseen.shape[0]}"
            )
        if self.availability_mask.shape != (self.unseen.shape[1],):
            raise DimensionError(
                "availability mask must have one entry per unseen class"
            )


@dataclass(frozen=True)
class StructureSet:
    """The (w_s, w_u, w_su) similarity triple for one structure source."""

    source_name: str
    w_s: np.ndarray
    w_u: np.ndarray
    w_su: np.ndarray


@dataclass(frozen=True)
class FusionWeights:
    """Simplex weight vectors: ``beta`` fuses seen structures, ``gamma``
    fuses unseen and cross structures.  Index -1 is the visual source."""

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        for name, vec in (("beta", self.beta), ("gamma", self.gamma)):
            vec = np.asarray(vec, dtype=np.float64)
            object.__setattr__(self, name, vec)
            if vec.ndim != 1 or vec.size == 0:
                raise ValidationError(f"{name} must be a nonempty vector")
            if abs(vec.sum() - 1.0) > SIMPLEX_SUM_TOL:
                raise ValidationError(
                    f"{name} must sum to 1 within {SIMPLEX_SUM_TOL}, got {vec.sum()!r}"
                )
            if vec.min() < SIMPLEX_NEG_TOL:
                raise ValidationError(
                    f"{name} must be nonnegative, min component {vec.min()!r}"
                )

    @classmethod
    def uniform(cls, n_sources):
        w = np.full(n_sources, 1.0 / n_sources)
        return cls(beta=w, gamma=w.copy())


def class_prototypes(x, labels, k):
    """Per-class mean feature vectors.

    Parameters
    ----------
    x : ndarray, shape (d, n)
        Feature columns.
    labels : array of int, shape (n,)
        Class index per column, each in [0, k).
    k : int
        Number of classes.

    Returns
    -------
    prototypes : ndarray, shape (d, k)
        Column c is the mean of the columns labeled c (zero if none).
    mask : ndarray of bool, shape (k,)
        True where the class has at least one sample.
    """
    x = as_matrix(x, "x")
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != x.shape[1]:
        raise DimensionError("labels must have one entry per feature column")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValidationError(
            f"labels must lie in [0, {k}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    protos = np.zeros((x.shape[0], k))
    np.add.at(protos.T, labels, x.T)
    counts = np.bincount(labels, minlength=k)
    mask = counts > 0
    protos[:, mask] /= counts[mask]
    return protos, mask


def _pairwise_mahalanobis(z_rows, z_cols, sigma_inv):
    """d(i, j) = (z_i - z_j)' sigma_inv (z_i - z_j) for columns of the inputs."""
    g = z_rows.T @ sigma_inv @ z_cols
    qa = np.einsum("ij,ik,kj->j", z_rows, sigma_inv, z_rows)
    qb = np.einsum("ij,ik,kj->j", z_cols, sigma_inv, z_cols)
    d = qa[:, None] - 2.0 * g + qb[None, :]
    return np.maximum(d, 0.0)


def similarity_matrix(z_rows, z_cols, sigma_inv, row_normalize=False):
    """Normalized Gaussian-of-Mahalanobis affinities between column sets.

    Entry (i, j) is exp(-d(z_i, z_j)) divided by the sum of all entries
    (default) or by its row sum (``row_normalize``).  The exponentials are
    shifted by the minimum distance before normalizing, which leaves the
    result unchanged but avoids underflowing every entry to zero.
    """
    z_rows = as_matrix(z_rows, "z_rows")
    z_cols = as_matrix(z_cols, "z_cols")
    sigma_inv = as_matrix(sigma_inv, "sigma_inv")
    dim = z_rows.shape[0]
    if z_cols.shape[0] != dim or sigma_inv.shape != (dim, dim):
        raise DimensionError(
            f"dimension mismatch: z_rows {z_rows.shape}, z_cols {z_cols.shape}, "
            f"sigma_inv {sigma_inv.shape}"
        )
    if z_rows.shape[1] == 0 or z_cols.shape[1] == 0:
        raise DimensionError("similarity needs at least one prototype per side")
    d = _pairwise_mahalanobis(z_rows, z_cols, sigma_inv)
    if not np.all(np.isfinite(d)):
        raise NumericError("non-finite pairwise distance")
    return _normalize_weights(np.exp(-(d - d.min())), row_normalize)


def _normalize_weights(w, row_normalize):
    if row_normalize:
        sums = w.sum(axis=1, keepdims=True)
        nz = sums[:, 0] > 0.0
        w[nz] /= sums[nz]
        return w
    total = w.sum()
    if total > 0.0:
        w /= total
    return w


def regularized_inverse_covariance(prototypes, ridge=COVARIANCE_RIDGE):
    """Inverse of the prototype covariance with a trace-scaled ridge.

    Prototype counts are often below the embedding dimension, so the raw
    covariance is singular; the ridge ``ridge * (tr(S)/dim) * I`` keeps the
    inverse defined.  Falls back to unit scale when the trace is zero
    (all prototypes identical).
    """
    prototypes = as_matrix(prototypes, "prototypes")
    sigma = covariance(prototypes)
    dim = sigma.shape[0]
    scale = float(np.trace(sigma)) / dim
    if scale <= 0.0:
        scale = 1.0
    inv = np.linalg.inv(sigma + ridge * scale * np.eye(dim))
    return 0.5 * (inv + inv.T)


def _build_structures(prototypes, row_normalize):
    mask = prototypes.availability_mask
    k_u = prototypes.unseen.shape[1]
    available = prototypes.unseen[:, mask]
    sigma_inv = regularized_inverse_covariance(
        np.hstack([prototypes.seen, available])
    )
    w_s = similarity_matrix(
        prototypes.seen, prototypes.seen, sigma_inv, row_normalize
    )
    if not mask.any():
        k_s = prototypes.seen.shape[1]
        return StructureSet(
            source_name=prototypes.space_name,
            w_s=w_s,
            w_u=np.zeros((k_u, k_u)),
            w_su=np.zeros((k_s, k_u)),
        )
    w_u = _masked_similarity(prototypes.unseen, prototypes.unseen,
                             sigma_inv, mask, mask, row_normalize)
    w_su = _masked_similarity(prototypes.seen, prototypes.unseen, sigma_inv,
                              np.ones(prototypes.seen.shape[1], dtype=bool),
                              mask, row_normalize)
    return StructureSet(
        source_name=prototypes.space_name, w_s=w_s, w_u=w_u, w_su=w_su
    )


def _masked_similarity(z_rows, z_cols, sigma_inv, row_mask, col_mask,
                       row_normalize):
    """Similarity over the masked sub-block, re-embedded with zero rows and
    columns for unavailable classes (zeroed before normalization)."""
    w = np.zeros((z_rows.shape[1], z_cols.shape[1]))
    sub = similarity_matrix(
        z_rows[:, row_mask], z_cols[:, col_mask], sigma_inv, row_normalize
    )
    w[np.ix_(row_mask, col_mask)] = sub
    return w


def build_semantic_structures(prototypes, row_normalize=False):
    """Structure triple for a semantic space (all prototypes defined)."""
    if not prototypes.availability_mask.all():
        raise ValidationError(
            f"semantic space '{prototypes.space_name}' has undefined unseen "
            "prototypes"
        )
    return _build_structures(prototypes, row_normalize)


def build_visual_structures(prototypes, row_normalize=False):
    """Structure triple for the visual-prototype source.

    Unseen prototypes exist only for classes that currently have estimated
    samples; rows and columns of unavailable classes are zero, and with no
    available class at all ``w_u`` and ``w_su`` are zero placeholders.
    """
    return _build_structures(prototypes, row_normalize)


def fuse_structures(sources, weights):
    """Convex combination of structure sources.

    ``beta`` weights the seen structures, ``gamma`` the unseen and cross
    structures; the last index always denotes the visual source.
    """
    if not sources:
        raise ValidationError("need at least one structure source")
    n = len(sources)
    if weights.beta.size != n or weights.gamma.size != n:
        raise ValidationError(
            f"weights sized for {weights.beta.size} sources, got {n}"
        )
    shapes = {(s.w_s.shape, s.w_u.shape, s.w_su.shape) for s in sources}
    if len(shapes) != 1:
        raise DimensionError(f"structure sources disagree on shapes: {shapes}")
    w_s = sum(b * s.w_s for b, s in zip(weights.beta, sources))
    w_u = sum(g * s.w_u for g, s in zip(weights.gamma, sources))
    w_su = sum(g * s.w_su for g, s in zip(weights.gamma, sources))
    return StructureSet(source_name="fused", w_s=w_s, w_u=w_u, w_su=w_su)
