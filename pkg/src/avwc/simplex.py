"""Dense phase-one simplex for small feasibility problems ``A x = b, x >= 0``."""
from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-10


def phase_one(A, b, tol: float = 1e-8, pivot_tol: float = PIVOT_TOL,
              max_pivots: int = 50_000):
    """Return a feasible ``x`` or ``None``.

    Minimises the sum of artificial variables with Bland's rule, so the
    method terminates on degenerate problems.  The system is declared
    infeasible when the phase-one optimum exceeds ``tol``.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    # reduced costs of the phase-one objective (sum of artificials)
    tab[m, :n] = -A.sum(axis=0)
    tab[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    for _ in range(max_pivots):
        cost = tab[m, :-1]
        entering = np.flatnonzero(cost < -pivot_tol)
        if entering.size == 0:
            break
        j = int(entering[0])
        col = tab[:m, j]
        rows = np.flatnonzero(col > pivot_tol)
        if rows.size == 0:
            # cannot happen for a bounded phase-one problem
            break
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-15]
        i = int(min(ties, key=lambda r: basis[r]))
        tab[i] /= tab[i, j]
        for r in range(m + 1):
            if r != i and tab[r, j] != 0.0:
                tab[r] -= tab[r, j] * tab[i]
        basis[i] = j
    else:
        raise RuntimeError("phase-one simplex exceeded its pivot budget")

    if -tab[m, -1] > tol:
        return None
    x = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            x[var] = max(tab[i, -1], 0.0)
    return x
