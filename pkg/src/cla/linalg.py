"""Dense linear algebra kernels: real Schur decomposition, Sylvester solvers,
regularized symmetric solves, and covariance estimation.

All routines operate on 2-D float64 ``numpy`` arrays and are deterministic:
identical inputs produce bitwise-identical outputs within one build.  The
Schur decomposition is implemented directly (Householder reduction to
Hessenberg form followed by Francis double-shift QR iteration) so that the
Sylvester solver built on top of it is self-contained; an independent
Kronecker-vectorization oracle is provided for cross-checking it.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    CapacityError,
    ConvergenceError,
    DimensionError,
    NumericError,
    SingularMatrixError,
    ValidationError,
)

__all__ = [
    "SchurFactorization",
    "real_schur",
    "solve_sylvester",
    "solve_sylvester_oracle",
    "ridge_solve",
    "covariance",
]

# Total shifted-QR iteration budget is QR_ITERATION_CAP_FACTOR * n.
QR_ITERATION_CAP_FACTOR = 100


def as_matrix(x, name="matrix"):
    """Coerce ``x`` to a finite 2-D float64 array, raising on violation."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains non-finite entries")
    return m


def _as_square(x, name):
    m = as_matrix(x, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class SchurFactorization:
    """Real Schur factorization M = Q T Q^T.

    ``q`` is orthogonal and ``t`` is quasi-upper-triangular: everything below
    the first subdiagonal is exactly zero, and the diagonal carries 1x1 blocks
    (real eigenvalues) and 2x2 blocks (complex conjugate pairs).
    """

    q: np.ndarray
    t: np.ndarray


def _householder_vector(col):
    """Return (v, beta) with (I - beta v v^T) col = +-|col| e1."""
    alpha = np.linalg.norm(col)
    if alpha == 0.0:
        return np.zeros_like(col), 0.0
    if col[0] > 0.0:
        alpha = -alpha
    v = col.copy()
    v[0] -= alpha
    vv = v @ v
    if vv == 0.0:
        return np.zeros_like(col), 0.0
    return v, 2.0 / vv


def _hessenberg(a):
    """Reduce ``a`` to upper Hessenberg form H with a = Q H Q^T."""
    n = a.shape[0]
    h = a.copy()
    q = np.eye(n)
    for j in range(n - 2):
        v, beta = _householder_vector(h[j + 1 :, j])
        if beta == 0.0:
            continue
        h[j + 1 :, j:] -= beta * np.outer(v, v @ h[j + 1 :, j:])
        h[:, j + 1 :] -= beta * np.outer(h[:, j + 1 :] @ v, v)
        q[:, j + 1 :] -= beta * np.outer(q[:, j + 1 :] @ v, v)
        h[j + 2 :, j] = 0.0
    return h, q


def _split_2x2_block(h, q, i):
    """Triangularize the 2x2 diagonal block at (i, i) if its eigenvalues are
    real; complex-pair blocks are left untouched.  The rotation is applied to
    the full matrix and accumulated into ``q``."""
    a, b = h[i, i], h[i, i + 1]
    c, d = h[i + 1, i], h[i + 1, i + 1]
    if c == 0.0:
        return
    half = 0.5 * (a - d)
    disc = half * half + b * c
    if disc < 0.0:
        return
    # Eigenvector (lam - d, c) for the root maximizing |lam - d|; rotating it
    # into the first coordinate makes the block upper triangular.
    mid = 0.5 * (a + d)
    sq = np.sqrt(disc)
    lam = mid + sq if half >= 0.0 else mid - sq
    v0, v1 = lam - d, c
    nrm = np.hypot(v0, v1)
    cs, sn = v0 / nrm, v1 / nrm
    g = np.array([[cs, -sn], [sn, cs]])
    h[i : i + 2, :] = g.T @ h[i : i + 2, :]
    h[:, i : i + 2] = h[:, i : i + 2] @ g
    q[:, i : i + 2] = q[:, i : i + 2] @ g
    h[i + 1, i] = 0.0


def _francis_step(h, q, lo, hi, s, t):
    """One implicit double-shift QR sweep on the active window lo..hi
    (inclusive, size >= 3) with shift sum ``s`` and product ``t``."""
    x = h[lo, lo] * h[lo, lo] + h[lo, lo + 1] * h[lo + 1, lo] - s * h[lo, lo] + t
    y = h[lo + 1, lo] * (h[lo, lo] + h[lo + 1, lo + 1] - s)
    z = h[lo + 1, lo] * h[lo + 2, lo + 1]
    for k in range(lo, hi - 1):
        v, beta = _householder_vector(np.array([x, y, z]))
        if beta != 0.0:
            c0 = max(lo, k - 1)
            block = h[k : k + 3, c0:]
            block -= beta * np.outer(v, v @ block)
            r1 = min(k + 4, hi + 1)
            block = h[:r1, k : k + 3]
            block -= beta * np.outer(block @ v, v)
            qb = q[:, k : k + 3]
            qb -= beta * np.outer(qb @ v, v)
        if k > lo:
            # the reflection annihilated the bulge in column k-1 exactly
            h[k + 1, k - 1] = 0.0
            h[k + 2, k - 1] = 0.0
        x = h[k + 1, k]
        y = h[k + 2, k]
        if k < hi - 2:
            z = h[k + 3, k]
    v, beta = _householder_vector(np.array([x, y]))
    if beta != 0.0:
        block = h[hi - 1 : hi + 1, hi - 2 :]
        block -= beta * np.outer(v, v @ block)
        block = h[: hi + 1, hi - 1 : hi + 1]
        block -= beta * np.outer(block @ v, v)
        qb = q[:, hi - 1 : hi + 1]
        qb -= beta * np.outer(qb @ v, v)
    if hi - 1 > lo:
        h[hi, hi - 2] = 0.0


def real_schur(m):
    """Real Schur decomposition of a square matrix.

    Parameters
    ----------
    m : ndarray, shape (n, n)
        Square matrix with finite entries.

    Returns
    -------
    SchurFactorization
        ``q`` orthogonal, ``t`` quasi-upper-triangular with q @ t @ q.T == m
        up to roundoff.

    Raises
    ------
    DimensionError
        If ``m`` is not square.
    ConvergenceError
        If the QR iteration does not converge within 100*n total sweeps;
        the error carries the iteration count.

    Notes
    -----
    Householder reduction to Hessenberg form, then Francis double-shift QR
    with the shift pair taken from the trailing 2x2 block of the active
    window (the double-shift generalization of the Wilkinson shift, needed
    because a single real shift cannot converge onto complex conjugate
    pairs in real arithmetic).  Every tenth sweep without a deflation uses
    a deterministic exceptional shift to break cycles.  2x2 blocks with
    real eigenvalues are split into 1x1 blocks, so complex pairs are the
    only source of 2x2 blocks in ``t``.
    """
    a = _as_square(m, "m")
    n = a.shape[0]
    if n == 0:
        return SchurFactorization(q=np.eye(0), t=np.zeros((0, 0)))
    h, q = _hessenberg(a)
    eps = np.finfo(np.float64).eps
    smlnum = np.finfo(np.float64).tiny / eps * n
    hnorm = np.linalg.norm(h)
    max_sweeps = QR_ITERATION_CAP_FACTOR * n
    sweeps = 0
    stalled = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            tst = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if tst == 0.0:
                tst = hnorm if hnorm > 0.0 else 1.0
            if abs(h[lo, lo - 1]) <= max(eps * tst, smlnum):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stalled = 0
            continue
        if lo == hi - 1:
            _split_2x2_block(h, q, lo)
            hi = lo - 1
            stalled = 0
            continue
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"QR iteration did not converge within {max_sweeps} sweeps "
                f"for a {n}x{n} matrix",
                iterations=sweeps,
            )
        sweeps += 1
        stalled += 1
        if stalled % 10 == 0:
            # Exceptional shift built from subdiagonal magnitudes only.
            sd = abs(h[hi, hi - 1]) + abs(h[hi - 1, hi - 2])
            h11 = 0.75 * sd + h[hi, hi]
            s = h11 + h11
            t = h11 * h11 + 0.4375 * sd * sd
        else:
            s = h[hi - 1, hi - 1] + h[hi, hi]
            t = h[hi - 1, hi - 1] * h[hi, hi] - h[hi - 1, hi] * h[hi, hi - 1]
        _francis_step(h, q, lo, hi, s, t)
    h[np.tril_indices(n, -2)] = 0.0
    return SchurFactorization(q=q, t=h)


def _diagonal_blocks(t):
    """Yield (start, size) of the 1x1/2x2 diagonal blocks of a quasi-upper-
    triangular matrix."""
    n = t.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _block_eigenvalues(block):
    """Eigenvalues of a 1x1 or 2x2 block as complex numbers."""
    if block.shape[0] == 1:
        return [complex(block[0, 0])]
    tr = block[0, 0] + block[1, 1]
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    disc = tr * tr / 4.0 - det
    if disc >= 0.0:
        sq = np.sqrt(disc)
        return [complex(tr / 2.0 + sq), complex(tr / 2.0 - sq)]
    sq = np.sqrt(-disc)
    return [complex(tr / 2.0, sq), complex(tr / 2.0, -sq)]


def _format_eigenvalue(e):
    if e.imag == 0.0:
        return f"{e.real:.6g}"
    return f"{e.real:.6g}{e.imag:+.6g}j"


def _raise_shared_eigenvalue(ta_block, tb_block):
    pairs = [
        (ea, eb)
        for ea in _block_eigenvalues(ta_block)
        for eb in _block_eigenvalues(tb_block)
    ]
    ea, eb = min(pairs, key=lambda p: abs(p[0] + p[1]))
    raise SingularMatrixError(
        "Sylvester system is singular: eigenvalue "
        f"{_format_eigenvalue(ea)} of a and eigenvalue {_format_eigenvalue(eb)} "
        "of b satisfy lambda_a + lambda_b ~= 0"
    )


def solve_sylvester(a, b, c):
    """Solve the Sylvester equation a @ W + W @ b = c (Bartels-Stewart).

    Parameters
    ----------
    a : ndarray, shape (k, k)
    b : ndarray, shape (d, d)
    c : ndarray, shape (k, d)

    Returns
    -------
    ndarray, shape (k, d)
        Solution W with Frobenius residual ||aW + Wb - c|| <= 1e-8*(1+||c||)
        whenever the spectra of ``a`` and ``-b`` are well separated.

    Raises
    ------
    DimensionError
        On inconsistent shapes.
    SingularMatrixError
        If ``a`` and ``-b`` share an eigenvalue (the error names the pair).

    Notes
    -----
    Both ``a`` and ``b.T`` are brought to real Schur form; the transformed
    equation is solved by block back-substitution over the 1x1/2x2 diagonal
    blocks, each small system via its (at most 4x4) Kronecker matrix.
    """
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    c = as_matrix(c, "c")
    k, d = a.shape[0], b.shape[0]
    if c.shape != (k, d):
        raise DimensionError(
            f"c must have shape ({k}, {d}) to match a and b, got {c.shape}"
        )
    if k == 0 or d == 0:
        return np.zeros((k, d))

    fa = real_schur(a)
    fb = real_schur(b.T)
    ta, qa = fa.t, fa.q
    tb, qb = fb.t, fb.q
    # With a = Qa Ta Qa^T and b = Qb Tb^T Qb^T the equation becomes
    # Ta Y + Y Tb^T = F for Y = Qa^T W Qb; Tb^T is lower quasi-triangular.
    f = qa.T @ c @ qb
    s = tb.T
    y = np.zeros_like(f)
    eps = np.finfo(np.float64).eps

    row_blocks = _diagonal_blocks(ta)
    col_blocks = _diagonal_blocks(tb)
    for j0, nj in reversed(col_blocks):
        j1 = j0 + nj
        for i0, ni in reversed(row_blocks):
            i1 = i0 + ni
            rhs = f[i0:i1, j0:j1].copy()
            if j1 < d:
                rhs -= y[i0:i1, j1:] @ s[j1:, j0:j1]
            if i1 < k:
                rhs -= ta[i0:i1, i1:] @ y[i1:, j0:j1]
            kron = np.kron(np.eye(nj), ta[i0:i1, i0:i1]) + np.kron(
                tb[j0:j1, j0:j1], np.eye(ni)
            )
            sv = np.linalg.svd(kron, compute_uv=False)
            if sv[-1] <= 4.0 * eps * max(sv[0], 1.0):
                _raise_shared_eigenvalue(ta[i0:i1, i0:i1], tb[j0:j1, j0:j1])
            y[i0:i1, j0:j1] = np.linalg.solve(kron, rhs.flatten(order="F")).reshape(
                (ni, nj), order="F"
            )
    return qa @ y @ qb.T


def solve_sylvester_oracle(a, b, c):
    """Solve a @ W + W @ b = c by dense LU on the Kronecker system.

    Independent correctness reference for :func:`solve_sylvester`: builds
    (I (x) a + b^T (x) I) vec(W) = vec(c) explicitly and solves it with
    LU and partial pivoting.  Guarded to k*d <= 4096 unknowns.
    """
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    c = as_matrix(c, "c")
    k, d = a.shape[0], b.shape[0]
    if c.shape != (k, d):
        raise DimensionError(
            f"c must have shape ({k}, {d}) to match a and b, got {c.shape}"
        )
    if k * d > 4096:
        raise CapacityError(
            f"Kronecker system would have {k * d} unknowns (limit 4096)"
        )
    if k == 0 or d == 0:
        return np.zeros((k, d))
    kron = np.kron(np.eye(d), a) + np.kron(b.T, np.eye(k))
    try:
        w = np.linalg.solve(kron, c.flatten(order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Kronecker system is singular: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise SingularMatrixError("Kronecker solve produced non-finite values")
    return w.reshape((k, d), order="F")


def ridge_solve(g, rhs, eps):
    """Solve (g + eps*I) @ X = rhs for symmetric ``g``.

    Uses a LAPACK symmetric-indefinite factorization; ``eps`` adds a ridge
    on the diagonal so positive-semidefinite systems stay solvable.
    """
    g = _as_square(g, "g")
    rhs = as_matrix(rhs, "rhs")
    n = g.shape[0]
    if rhs.shape[0] != n:
        raise DimensionError(f"rhs must have {n} rows, got {rhs.shape[0]}")
    if eps < 0.0:
        raise ValidationError(f"eps must be nonnegative, got {eps}")
    scale = max(1.0, float(np.abs(g).max(initial=0.0)))
    if np.abs(g - g.T).max(initial=0.0) > 1e-10 * scale:
        raise DimensionError("g is not symmetric within 1e-10")
    system = g + eps * np.eye(n)
    try:
        x = scipy.linalg.solve(system, rhs, assume_a="sym")
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            f"symmetric factorization failed even with eps={eps:g}: {exc}"
        ) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError(
            f"symmetric solve produced non-finite values (eps={eps:g})"
        )
    return x


def covariance(z):
    """Empirical covariance of column observations, normalized by n.

    The 1/n convention makes a single observation yield the zero matrix.
    The result is exactly symmetric.
    """
    z = as_matrix(z, "z")
    n = z.shape[1]
    if n < 1:
        raise DimensionError("covariance needs at least one column observation")
    centered = z - z.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / n
    return 0.5 * (cov + cov.T)
