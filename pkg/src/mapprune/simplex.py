"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves min c.z subject to A z = b, z >= 0 on a dense tableau.  Bland's rule
(lowest eligible index enters, ratio ties leave by lowest basis index) makes
the pivot sequence, and therefore the returned vertex, deterministic for
identical input bytes.  Intended for desk-scale problems, up to a few
thousand variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

RC_TOL = 1e-9     # reduced-cost threshold for entering columns
PIVOT_TOL = 1e-9  # smallest usable pivot element
PHASE1_TOL = 1e-7  # residual infeasibility accepted after phase 1


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    value: float
    iterations: int
    basis: tuple[int, ...]


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    column = T[:, col].copy()
    column[row] = 0.0
    T -= np.outer(column, T[row])
    # Clean the pivot column exactly to keep later index tests sharp.
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _run(T: np.ndarray, basis: np.ndarray, allowed: int, max_pivots: int, start: int) -> int:
    """Bland-rule pivoting until optimality.  Returns the pivot count."""
    m = T.shape[0] - 1
    count = start
    while True:
        rc = T[m, :allowed]
        entering = np.flatnonzero(rc < -RC_TOL)
        if entering.size == 0:
            return count
        j = int(entering[0])
        col = T[:m, j]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            raise SolverError("LP is unbounded (broken constraint system)")
        ratios = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * (1.0 + abs(best))]
        i = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, i, j)
        count += 1
        if count > max_pivots:
            raise SolverError(f"simplex exceeded the pivot budget ({max_pivots})")


def solve_standard_form(
    c: np.ndarray,
    a_eq: np.ndarray,
    b_eq: np.ndarray,
    *,
    max_pivots: int | None = None,
) -> SimplexResult:
    """Minimize c.z over {A z = b, z >= 0}; returns an optimal basic solution.

    Raises SolverError if the pivot budget is exhausted or the system is
    infeasible (which cannot happen for well-formed marginal polytopes).
    """
    A = np.array(a_eq, dtype=np.float64)
    b = np.array(b_eq, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise SolverError(f"inconsistent LP shapes: A {A.shape}, b {b.shape}, c {c.shape}")
    if max_pivots is None:
        max_pivots = 20000 + 50 * (m + n)

    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial identity basis, minimize the artificial sum.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    pivots = _run(T, basis, n, max_pivots, 0)
    if T[m, -1] < -PHASE1_TOL:
        raise SolverError(f"LP infeasible (phase-1 residual {-T[m, -1]:.3e})")

    # Drive leftover artificials out of the basis; rows that cannot pivot on
    # any structural column are redundant constraints and are dropped.
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if basis[row] < n:
            continue
        structural = np.flatnonzero(np.abs(T[row, :n]) > PIVOT_TOL)
        if structural.size:
            _pivot(T, basis, row, int(structural[0]))
            pivots += 1
        else:
            keep[row] = False
    if not keep.all():
        T = np.vstack([T[:m][keep], T[m:]])
        basis = basis[keep]
        m = int(keep.sum())

    # Phase 2 on structural columns only.
    T = np.hstack([T[:, :n], T[:, -1:]])
    T[m, :n] = c
    T[m, -1] = 0.0
    for row in range(m):
        j = basis[row]
        if c[j] != 0.0:
            T[m] -= c[j] * T[row]
    pivots = _run(T, basis, n, max_pivots, pivots)

    x = np.zeros(n)
    x[basis] = T[:m, -1]
    np.maximum(x, 0.0, out=x)  # scrub -1e-17 style round-off
    return SimplexResult(
        x=x, value=float(np.dot(c, x)), iterations=pivots, basis=tuple(int(j) for j in basis)
    )
