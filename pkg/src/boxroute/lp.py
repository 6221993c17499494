"""Thin LP-relaxation oracle over scipy's HiGHS interface.

The branch-and-cut engine owns rows and columns; this module only turns
(cost, equality rows, inequality rows, bounds) into a primal point and
objective. Deterministic for fixed input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, vstack

__all__ = ["LpOracleError", "LpResult", "HighsLpOracle", "rows_to_matrix"]


class LpOracleError(RuntimeError):
    """The backend failed in a way that is not plain infeasibility."""


@dataclass(frozen=True)
class LpResult:
    status: str          # "optimal" | "infeasible"
    objective: float
    x: np.ndarray | None


def rows_to_matrix(rows, ncols: int) -> csr_matrix | None:
    """rows: iterable of (coef: dict col->float, rhs); returns the matrix only."""
    rows = list(rows)
    if not rows:
        return None
    data, indices, indptr = [], [], [0]
    for coefs, _rhs in rows:
        for col, val in sorted(coefs.items()):
            indices.append(col)
            data.append(val)
        indptr.append(len(indices))
    return csr_matrix((data, indices, indptr), shape=(len(rows), ncols))


class HighsLpOracle:
    def __init__(self):
        self.solve_count = 0

    def solve(
        self,
        cost: np.ndarray,
        a_eq,
        b_eq,
        a_ub,
        b_ub,
        lower: np.ndarray,
        upper: np.ndarray,
    ) -> LpResult:
        self.solve_count += 1
        bounds = np.column_stack([lower, upper])
        res = linprog(
            cost,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=bounds,
            method="highs",
        )
        if res.status == 0:
            return LpResult("optimal", float(res.fun), np.asarray(res.x))
        if res.status == 2:
            return LpResult("infeasible", float("inf"), None)
        raise LpOracleError(f"LP solve failed: status={res.status} {res.message}")


def stack_ub(static: csr_matrix | None, extra: csr_matrix | None):
    if static is None:
        return extra
    if extra is None:
        return static
    return vstack([static, extra], format="csr")
