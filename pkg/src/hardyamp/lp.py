"""Dense two-phase simplex for the small LPs over no-signaling polytopes.

Problems have the form::

    max / min  c @ x
    s.t.       A_eq @ x == b_eq
               A_ub @ x <= b_ub
               x >= 0

Pivoting uses Dantzig's rule and falls back to Bland's rule after a run of
degenerate pivots.  The final primal point and dual multipliers are recomputed
from the optimal basis by direct solves, so they are accurate to round-off.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass
class LPProblem:
    c: np.ndarray
    sense: str = "max"
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "inequality")

    @property
    def n(self) -> int:
        return self.c.size

    def to_json(self) -> str:
        return json.dumps({
            "sense": self.sense,
            "c": self.c.tolist(),
            "A_eq": self.A_eq.tolist(), "b_eq": self.b_eq.tolist(),
            "A_ub": self.A_ub.tolist(), "b_ub": self.b_ub.tolist(),
            "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
        })

    @classmethod
    def from_json(cls, text: str) -> "LPProblem":
        d = json.loads(text)
        n = len(d["c"])
        return cls(
            c=d["c"], sense=d["sense"],
            A_eq=np.array(d["A_eq"], dtype=float).reshape(-1, n), b_eq=d["b_eq"],
            A_ub=np.array(d["A_ub"], dtype=float).reshape(-1, n), b_ub=d["b_ub"],
            labels=[tuple(l) if isinstance(l, list) else l for l in d["labels"]],
        )


def _rows(A, b, n, what):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.size == 0:
        A = A.reshape(0, n)
    if A.shape[1] != n or A.shape[0] != b.size:
        raise ValueError(f"{what} block has shape {A.shape} with {b.size} right-hand sides for {n} variables")
    if not np.all(np.isfinite(b)) or not np.all(np.isfinite(A)):
        raise ValueError(f"{what} block contains non-finite values")
    return A, b


@dataclass
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = float("nan")
    x: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    duals_ub: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    def __init__(self, T, basis):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> str:
        """Minimise the objective stored in the last row over columns in ``allowed``."""
        T = self.T
        degenerate_run = 0
        bland = False
        while True:
            if self.iterations > max_iter:
                raise SolverError(f"simplex did not converge in {max_iter} pivots")
            rc = T[-1, :-1]
            cand = np.flatnonzero(allowed & (rc < -PIVOT_TOL))
            if cand.size == 0:
                return "optimal"
            j = int(cand[0]) if bland else int(cand[np.argmin(rc[cand])])
            colj = T[:-1, j]
            pos = np.flatnonzero(colj > PIVOT_TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / colj[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(ties[np.argmin(self.basis[ties])])
            if best <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            self.pivot(r, j)


def _standard_form(prob: LPProblem):
    """Return (A, b, c, row_sign, n_slack) of ``min c x, A x = b, x >= 0`` with ``b >= 0``."""
    n = prob.n
    m_eq, m_ub = prob.A_eq.shape[0], prob.A_ub.shape[0]
    A = np.zeros((m_eq + m_ub, n + m_ub))
    A[:m_eq, :n] = prob.A_eq
    A[m_eq:, :n] = prob.A_ub
    A[m_eq:, n:] = np.eye(m_ub)
    b = np.concatenate([prob.b_eq, prob.b_ub])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    c = np.zeros(n + m_ub)
    c[:n] = prob.c if prob.sense == "min" else -prob.c
    return A, b, c, sign


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Indices of a maximal independent row subset, or None if the dropped rows are inconsistent."""
    if A.shape[0] == 0:
        return np.arange(0)
    _, R, piv = qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * max(1.0, d[0] if d.size else 0.0)))
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(A.shape[0]), keep)
    if drop.size:
        coef, *_ = np.linalg.lstsq(A[keep].T, A[drop].T, rcond=None)
        if np.max(np.abs(coef.T @ b[keep] - b[drop])) > 1e-8 * max(1.0, np.abs(b).max()):
            return None
    return keep


def solve(prob: LPProblem, max_iter: int = 50_000) -> LPSolution:
    A, b, c, sign = _standard_form(prob)
    rows0 = _independent_rows(A, b)
    if rows0 is None:
        return LPSolution("infeasible")
    m_all = A.shape[0]
    A, b = A[rows0], b[rows0]
    m, N = A.shape
    if m == 0:
        if np.any(c < -PIVOT_TOL):
            return LPSolution("unbounded")
        x = np.zeros(prob.n)
        return LPSolution("optimal", 0.0, x, np.zeros(prob.A_eq.shape[0]), np.zeros(prob.A_ub.shape[0]))

    # phase 1: artificial variable per row
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N:N + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :N] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    tab = _Tableau(T, np.arange(N, N + m))
    allowed = np.ones(N + m, dtype=bool)
    tab.run(allowed, max_iter)
    if -T[-1, -1] > FEAS_TOL * max(1.0, b.sum()):
        return LPSolution("infeasible", iterations=tab.iterations)

    # drive zero-level artificials out; rows that cannot be pivoted are redundant
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if tab.basis[r] >= N:
            row = T[r, :N]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))
            else:
                keep[r] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, N + 1))
    T2[:-1, :N] = T[rows, :N]
    T2[:-1, -1] = T[rows, -1]
    basis = tab.basis[rows].copy()
    T2[-1, :N] = c
    T2[-1, -1] = 0.0
    for r, j in enumerate(basis):
        T2[-1] -= c[j] * T2[r]
    tab2 = _Tableau(T2, basis)
    tab2.iterations = tab.iterations
    status = tab2.run(np.ones(N, dtype=bool), max_iter)
    if status == "unbounded":
        return LPSolution("unbounded", iterations=tab2.iterations)

    # recompute the vertex and the duals from the optimal basis
    B = tab2.basis
    A_red, b_red = A[rows], b[rows]
    AB = A_red[:, B]
    try:
        xB = np.linalg.solve(AB, b_red)
        y_red = np.linalg.solve(AB.T, c[B])
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular optimal basis ({exc})") from exc
    xs = np.zeros(N)
    xs[B] = np.clip(xB, 0.0, None)
    y0 = np.zeros(m)
    y0[rows] = y_red
    y = np.zeros(m_all)
    y[rows0] = y0
    y *= sign  # undo the row flips
    if prob.sense == "max":
        y = -y
    n = prob.n
    x = xs[:n]
    m_eq = prob.A_eq.shape[0]
    return LPSolution(
        "optimal", float(prob.c @ x), x,
        duals_eq=y[:m_eq], duals_ub=y[m_eq:], iterations=tab2.iterations,
    )


def certificate_residuals(prob: LPProblem, sol: LPSolution) -> dict:
    """Duality gap and dual infeasibility of ``sol`` for ``prob``.

    For a max problem the dual is ``min b y + b_ub w`` with
    ``A_eq' y + A_ub' w >= c`` and ``w >= 0``; signs flip for min problems.
    """
    y, w = sol.duals_eq, sol.duals_ub
    dual_obj = float(prob.b_eq @ y + prob.b_ub @ w)
    lhs = prob.A_eq.T @ y + prob.A_ub.T @ w
    if prob.sense == "max":
        infeas = max(0.0, float(np.max(prob.c - lhs, initial=0.0)), float(np.max(-w, initial=0.0)))
    else:
        infeas = max(0.0, float(np.max(lhs - prob.c, initial=0.0)), float(np.max(w, initial=0.0)))
    primal_res = 0.0
    if prob.A_eq.size:
        primal_res = float(np.max(np.abs(prob.A_eq @ sol.x - prob.b_eq)))
    if prob.A_ub.size:
        primal_res = max(primal_res, float(np.max(prob.A_ub @ sol.x - prob.b_ub, initial=0.0)))
    return {
        "gap": abs(dual_obj - sol.value),
        "dual_infeasibility": infeas,
        "primal_residual": primal_res,
        "dual_value": dual_obj,
    }
