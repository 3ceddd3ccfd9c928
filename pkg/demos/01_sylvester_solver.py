"""Real Schur decomposition and the Bartels-Stewart Sylvester solver.

The encoder training step reduces to the matrix equation A W + W B = C.
This demo factors a random matrix into Q T Q', solves a Sylvester system
by block back-substitution, and cross-checks the answer against the
dense Kronecker-vectorization oracle.
"""

import numpy as np

from cla import real_schur, solve_sylvester, solve_sylvester_oracle

rng = np.random.default_rng(0)

# --- real Schur form -------------------------------------------------------
m = rng.standard_normal((6, 6))
f = real_schur(m)
print("Schur reconstruction error:",
      np.linalg.norm(f.q @ f.t @ f.q.T - m))
print("orthogonality error:       ",
      np.linalg.norm(f.q.T @ f.q - np.eye(6)))
print("T diagonal (eigenvalue blocks):")
print(np.array_str(f.t, precision=3, suppress_small=True))

# --- Sylvester solve -------------------------------------------------------
ra = rng.standard_normal((5, 5))
a = ra @ ra.T + 5 * np.eye(5)          # SPD, spectrum well separated from -b
rb = rng.standard_normal((4, 4))
b = rb @ rb.T + 4 * np.eye(4)
c = rng.standard_normal((5, 4))

w = solve_sylvester(a, b, c)
print("\nresidual |aW + Wb - c| =", np.linalg.norm(a @ w + w @ b - c))

w_oracle = solve_sylvester_oracle(a, b, c)
print("max difference vs Kronecker oracle =", np.abs(w - w_oracle).max())
