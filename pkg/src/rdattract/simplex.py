"""Small dense linear programs by the two-phase tableau simplex method.

Pivoting follows Bland's rule (lowest eligible index enters and leaves), so
the method terminates on degenerate problems.  Intended for the tiny
problems (tens of variables) that appear in weight certificates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    """Numerical breakdown inside the simplex method (not infeasibility)."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: float | None
    iterations: int


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


def _run(T, basis, n_cols, tol, max_iter):
    """Maximize with objective in the last row (reduced costs); Bland's rule."""
    it = 0
    while True:
        obj = T[-1, :n_cols]
        entering = np.flatnonzero(obj < -tol)
        if entering.size == 0:
            return "optimal", it
        col = int(entering[0])
        column = T[:-1, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise LPError("simplex iteration limit reached")


def maximize(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol=1e-11, max_iter=10_000) -> LPResult:
    """Maximize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: x | slacks | artificials | rhs
    n_struct = n + m_ub
    T = np.zeros((m + 1, n_struct + m + 1))
    T[:m_ub, :n] = A_ub
    T[:m_ub, n:n_struct] = np.eye(m_ub)
    T[m_ub:m, :n] = A_eq
    T[:m, -1] = np.concatenate([b_ub, b_eq])
    neg = T[:m, -1] < 0
    T[:m][neg] *= -1.0
    T[:m, n_struct:n_struct + m] = np.eye(m)
    basis = list(range(n_struct, n_struct + m))

    # phase 1: maximize -(sum of artificials)
    T[-1, :] = -T[:m].sum(axis=0)
    T[-1, n_struct:n_struct + m] = 0.0
    status, it1 = _run(T, basis, n_struct + m, tol, max_iter)
    if status != "optimal":
        raise LPError("phase 1 did not reach an optimum")
    scale = max(1.0, float(np.abs(T[:m, -1]).max(initial=0.0)))
    if T[-1, -1] < -tol * scale * 100:
        return LPResult("infeasible", None, None, it1)

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n_struct:
            cands = np.flatnonzero(np.abs(T[r, :n_struct]) > tol)
            if cands.size == 0:
                continue
            _pivot(T, r, int(cands[0]))
            basis[r] = int(cands[0])
        keep.append(r)
    T = np.vstack([T[keep][:, list(range(n_struct)) + [-1]], np.zeros((1, n_struct + 1))])
    basis = [basis[r] for r in keep]

    # phase 2
    cost = np.concatenate([c, np.zeros(m_ub)])
    cb = cost[basis]
    T[-1, :n_struct] = cb @ T[:-1, :n_struct] - cost
    T[-1, -1] = cb @ T[:-1, -1]
    status, it2 = _run(T, basis, n_struct, tol, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, None, it1 + it2)
    x = np.zeros(n_struct)
    x[basis] = T[:-1, -1]
    if np.any(~np.isfinite(x)):
        raise LPError("non-finite solution")
    return LPResult("optimal", x[:n], float(c @ x[:n]), it1 + it2)
