"""Revised simplex for standard-form linear programs.

    minimize    c @ x
    subject to  A @ x == b,  x >= 0

The caller supplies a primal-feasible starting basis, so there is no phase
one. Pivoting follows Bland's rule (lowest eligible index for both the
entering and the leaving variable), which cannot cycle. The basis inverse is
kept explicitly, updated with an eta step per pivot and recomputed from
scratch every ``refactor_every`` pivots.
"""

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    """Raised when the simplex cannot return an optimal vertex."""


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    basis: np.ndarray
    duals: np.ndarray
    iterations: int


def revised_simplex(c, A, b, basis, tol=1e-10, max_iter=100_000, refactor_every=64):
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, N = A.shape
    basis = np.array(basis, dtype=np.intp)
    if basis.shape != (m,):
        raise ValueError(f"basis must list {m} columns, got {basis.shape}")
    if not (np.isfinite(A).all() and np.isfinite(b).all() and np.isfinite(c).all()):
        raise LPError("non-finite problem data")

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    feas_tol = tol * scale

    def refactor():
        B = A[:, basis]
        try:
            B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LPError("singular basis") from exc
        return B_inv, B_inv @ b

    B_inv, x_B = refactor()
    if (x_B < -feas_tol * 1e3).any():
        raise LPError("starting basis is not primal feasible")
    x_B = np.maximum(x_B, 0.0)

    for it in range(max_iter):
        y = c[basis] @ B_inv
        reduced = c - y @ A
        eligible = np.flatnonzero(reduced < -tol)
        if eligible.size == 0:
            x = np.zeros(N)
            x[basis] = x_B
            return LPResult(x=x, value=float(c @ x), basis=basis.copy(), duals=y, iterations=it)
        q = eligible[0]

        d = B_inv @ A[:, q]
        rows = np.flatnonzero(d > tol)
        if rows.size == 0:
            raise LPError("problem is unbounded")
        ratios = x_B[rows] / d[rows]
        best = ratios.min()
        ties = rows[ratios <= best + feas_tol]
        p = ties[np.argmin(basis[ties])]

        theta = x_B[p] / d[p]
        x_B = x_B - theta * d
        x_B[p] = theta
        np.maximum(x_B, 0.0, out=x_B)

        pivot_row = B_inv[p] / d[p]
        B_inv -= np.outer(d, pivot_row)
        B_inv[p] = pivot_row
        basis[p] = q

        if (it + 1) % refactor_every == 0:
            B_inv, x_B = refactor()
            np.maximum(x_B, 0.0, out=x_B)

    raise LPError(f"no optimum after {max_iter} pivots")
