"""Simplex-constrained quadratic minimization by projected gradient descent.

Both structure-fusion weight updates (the seen-side weights and the
unseen-side weights) reduce to minimizing a convex quadratic
``0.5 x' Q x + c' x`` over the probability simplex.  The solver here is
deterministic: uniform initialization, Euclidean projection onto the
simplex, Armijo backtracking on the projection arc, objective tolerance
1e-9, iteration cap 10000.
"""

import numpy as np

from .errors import DimensionError, NumericError

__all__ = ["project_to_simplex", "minimize_quadratic_on_simplex"]

OBJECTIVE_TOLERANCE = 1e-9
MAX_ITERATIONS = 10_000
MAX_BACKTRACKS = 60
ARMIJO_SLOPE = 1e-4
BACKTRACK_FACTOR = 0.5


def project_to_simplex(v):
    """Euclidean projection of ``v`` onto {x : x >= 0, sum(x) = 1}.

    Standard sort-based algorithm; O(n log n) and exact up to roundoff.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError("projection needs a nonempty 1-D vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    valid = u - css / idx > 0.0
    rho = idx[valid][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def minimize_quadratic_on_simplex(quad, lin=None):
    """Minimize f(x) = 0.5 x' quad x + lin' x over the probability simplex.

    Parameters
    ----------
    quad : ndarray, shape (n, n)
        Symmetric positive-semidefinite quadratic term.
    lin : ndarray, shape (n,), optional
        Linear term; defaults to zero.

    Returns
    -------
    x : ndarray, shape (n,)
        Minimizer (global, since the problem is convex); exactly [1.0]
        when n == 1, and uniform when the objective is identically zero.

    Notes
    -----
    Projected gradient with an adaptive step: the step starts at 1/L
    (L = largest eigenvalue of ``quad``), grows 2x after every immediately
    accepted step, and is halved under the Armijo test
    f(x+) <= f(x) + 1e-4 * grad'(x+ - x).  Terminates when the objective
    improves by less than 1e-9 * max(1, |f|) or after 10000 iterations.
    """
    quad = np.asarray(quad, dtype=np.float64)
    n = quad.shape[0]
    if quad.shape != (n, n):
        raise DimensionError(f"quad must be square, got {quad.shape}")
    if lin is None:
        lin = np.zeros(n)
    lin = np.asarray(lin, dtype=np.float64)
    if lin.shape != (n,):
        raise DimensionError(f"lin must have shape ({n},), got {lin.shape}")
    if not (np.all(np.isfinite(quad)) and np.all(np.isfinite(lin))):
        raise NumericError("quadratic program has non-finite coefficients")
    if n == 1:
        return np.ones(1)

    def objective(x):
        return 0.5 * x @ quad @ x + lin @ x

    x = np.full(n, 1.0 / n)
    lmax = float(np.linalg.eigvalsh(0.5 * (quad + quad.T))[-1])
    if lmax <= 0.0:
        # objective is affine (or identically zero) on the simplex up to
        # PSD roundoff; uniform weights are as good as any interior point
        if np.abs(lin - lin[0]).max() <= 1e-15 * max(1.0, np.abs(lin).max()):
            return x
        lmax = max(1.0, np.abs(lin).max())
    step = 1.0 / lmax
    f = objective(x)
    for _ in range(MAX_ITERATIONS):
        grad = quad @ x + lin
        accepted = False
        first_try = True
        for _ in range(MAX_BACKTRACKS):
            cand = project_to_simplex(x - step * grad)
            f_cand = objective(cand)
            if f_cand <= f + ARMIJO_SLOPE * (grad @ (cand - x)):
                accepted = True
                break
            first_try = False
            step *= BACKTRACK_FACTOR
        if not accepted:
            break
        improvement = f - f_cand
        x, f = cand, f_cand
        if first_try:
            step *= 2.0
        if improvement <= OBJECTIVE_TOLERANCE * max(1.0, abs(f)):
            break
    polished = _polish_active_face(quad, lin, x)
    if polished is not None and objective(polished) < f:
        return polished
    return x


def _polish_active_face(quad, lin, x):
    """Active-set refinement of a PGD iterate.

    A single global step length cannot resolve curvature ratios beyond
    roughly 1/OBJECTIVE_TOLERANCE, so the PGD answer is polished by solving
    the equality-constrained KKT system on the active face exactly,
    exchanging coordinates until the multiplier conditions hold.  Returns
    None when no feasible improvement was found; the caller keeps whichever
    point has the lower objective.
    """
    n = x.size
    support = x > 0.0
    best = None
    for _ in range(2 * n + 2):
        idx = np.flatnonzero(support)
        m = idx.size
        kkt = np.zeros((m + 1, m + 1))
        kkt[:m, :m] = quad[np.ix_(idx, idx)]
        kkt[:m, m] = 1.0
        kkt[m, :m] = 1.0
        rhs = np.concatenate([-lin[idx], [1.0]])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return best
        if not np.all(np.isfinite(sol)):
            return best
        xs, nu = sol[:m], sol[m]
        if xs.min() < 0.0:
            support[idx[np.argmin(xs)]] = False
            if not support.any():
                return best
            continue
        cand = np.zeros(n)
        cand[idx] = xs
        best = cand
        reduced = quad @ cand + lin - nu
        reduced[idx] = 0.0
        worst = np.argmin(reduced)
        if reduced[worst] >= -1e-12 * max(1.0, abs(nu)):
            return best
        support[worst] = True
    return best
