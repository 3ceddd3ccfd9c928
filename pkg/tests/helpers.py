"""Shared oracles for the test suite (kept independent of the library's
computation paths)."""

import numpy as np


def simplex_grid(m, res=0.001):
    """All points of the (m-1)-simplex with coordinates on a res lattice."""
    steps = int(round(1 / res))
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        g = np.arange(steps + 1) * res
        return np.stack([g, 1 - g], axis=1)
    if m == 3:
        pts = []
        for i in range(steps + 1):
            j = np.arange(steps - i + 1)
            a = np.full(j.size, i * res)
            b = j * res
            pts.append(np.stack([a, b, 1 - a - b], axis=1))
        return np.vstack(pts)
    raise ValueError("grid only implemented for m <= 3")


def quadratic_grid_minimum(quad, lin, res=0.001):
    """Exhaustive minimum of 0.5 x'Qx + c'x over the lattice simplex."""
    g = simplex_grid(quad.shape[0], res)
    vals = 0.5 * np.einsum("ij,jk,ik->i", g, quad, g) + g @ lin
    return float(vals.min())


def brute_force_top_n(scores, truth, n):
    """Per-sample sort oracle with explicit low-index tie-breaking."""
    k_u, n_samples = scores.shape
    correct = np.zeros(n_samples, dtype=bool)
    for j in range(n_samples):
        ranked = sorted(range(k_u), key=lambda c: (-scores[c, j], c))
        correct[j] = truth[j] in ranked[:n]
    per_class = {}
    for c in range(k_u):
        members = truth == c
        if members.any():
            per_class[c] = 100.0 * correct[members].mean()
    return float(np.mean(list(per_class.values()))), per_class


def per_class_top1_accuracy(labels, truth, k_u):
    """Unweighted mean over classes of top-1 accuracy from hard labels."""
    per_class = [
        (labels[truth == c] == c).mean() for c in range(k_u) if (truth == c).any()
    ]
    return 100.0 * float(np.mean(per_class))
