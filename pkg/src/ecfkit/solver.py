"""Least squares under box and linear inequality constraints.

Solves ``min ||A x - b||^2`` subject to ``G x <= h`` and ``lower <= x <= upper``
with a primal active-set method: a phase-1 linear program finds a feasible
start, then null-space steps on the current working set are alternated with
multiplier checks until the KKT conditions hold. Ties in the ratio test and
in multiplier-based constraint removal are broken by smallest constraint
index (Bland's rule), which rules out cycling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InputError


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    kkt_tol: float = 1e-6
    max_iter: int | None = None  # default 200 * n, resolved per problem


@dataclass
class ConstrainedLsProblem:
    """Data for one box- and inequality-constrained least-squares instance."""

    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        n = self.A.shape[1]
        self.G = np.asarray(self.G, dtype=float).reshape(-1, n) if np.size(self.G) else np.zeros((0, n))
        self.h = np.asarray(self.h, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        if self.b.shape[0] != self.A.shape[0]:
            raise InputError("b must have one entry per row of A")
        if self.h.shape[0] != self.G.shape[0]:
            raise InputError("h must have one entry per row of G")
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise InputError("bounds must have one entry per column of A")
        if np.any(self.lower > self.upper):
            raise InputError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass
class LsSolution:
    x: np.ndarray
    objective: float
    kkt_residual: float
    status: SolveStatus


def _feasible_start(problem: ConstrainedLsProblem, feas_tol: float):
    """Feasible point, preferring the zero vector, else a phase-1 LP.

    The LP minimizes the total violation of ``G x <= h`` over the box; a
    strictly positive optimum certifies an empty feasible set.
    """
    x = np.clip(np.zeros(problem.n), problem.lower, problem.upper)
    if problem.G.shape[0] == 0:
        return x
    scale = max(1.0, float(np.max(np.abs(problem.h))) if problem.h.size else 1.0)
    if np.all(problem.G @ x - problem.h <= feas_tol * scale):
        return x
    n, q = problem.n, problem.G.shape[0]
    # variables (x, s): min sum(s)  s.t.  G x - s <= h,  s >= 0,  box on x
    cost = np.concatenate([np.zeros(n), np.ones(q)])
    A_ub = np.hstack([problem.G, -np.eye(q)])
    bounds = [(lo, up) for lo, up in zip(problem.lower, problem.upper)] + [(0.0, None)] * q
    res = linprog(cost, A_ub=A_ub, b_ub=problem.h, bounds=bounds, method="highs")
    if not res.success or res.fun > feas_tol * scale:
        return None
    return np.clip(res.x[:n], problem.lower, problem.upper)


def _null_space(C: np.ndarray, n: int) -> np.ndarray:
    if C.shape[0] == 0:
        return np.eye(n)
    u, s, vt = np.linalg.svd(C, full_matrices=True)
    tol = max(C.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def solve_box_lin_ls(problem: ConstrainedLsProblem, opts: SolverOptions | None = None) -> LsSolution:
    """Minimize ``||A x - b||^2`` over ``G x <= h`` and the bound box.

    Returns the optimum with a KKT residual (stationarity, multiplier sign,
    and complementary slackness, all folded into one max). Status is
    ``INFEASIBLE`` when phase 1 proves the constraints inconsistent and
    ``ITERATION_LIMIT`` when the cap is reached before the KKT tolerance.
    """
    opts = opts or SolverOptions()
    n = problem.n
    max_iter = opts.max_iter if opts.max_iter is not None else 200 * n

    x0 = _feasible_start(problem, opts.feas_tol)
    if x0 is None:
        return LsSolution(np.full(n, np.nan), np.inf, np.inf, SolveStatus.INFEASIBLE)

    # all inequalities as rows of C x <= d: general constraints, then upper, then lower bounds
    C = np.vstack([problem.G, np.eye(n), -np.eye(n)])
    d = np.concatenate([problem.h, problem.upper, -problem.lower])
    finite = np.isfinite(d)
    C, d = C[finite], d[finite]

    AtA = problem.A.T @ problem.A
    trace = float(np.trace(AtA))
    ridge = 1e-12 * trace / n  # keeps the reduced Hessian invertible for rank-deficient A
    H = 2.0 * (AtA + ridge * np.eye(n))
    c = -2.0 * (problem.A.T @ problem.b)

    def objective(x):
        r = problem.A @ x - problem.b
        return float(r @ r)

    def finish(x, working, lam_w, status):
        x = np.clip(x, problem.lower, problem.upper)  # remove float-level drift off the box
        lam = np.zeros(C.shape[0])
        lam[working] = lam_w
        grad = H @ x + c
        r_stat = float(np.max(np.abs(grad + C.T @ lam))) if C.size else float(np.max(np.abs(grad), initial=0.0))
        slack = C @ x - d
        r_comp = float(np.max(np.abs(lam * slack), initial=0.0))
        r_neg = float(max(0.0, -np.min(lam, initial=0.0)))
        residual = max(r_stat, r_comp, r_neg)
        feas_scale = max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
        infeasibility = float(np.max(C @ x - d, initial=0.0)) if C.size else 0.0
        if status is SolveStatus.OPTIMAL and (residual > opts.kkt_tol or infeasibility > opts.feas_tol * feas_scale):
            status = SolveStatus.ITERATION_LIMIT
        return LsSolution(x, objective(x), residual, status)

    if trace == 0.0:
        # objective is constant: any feasible point is optimal
        return LsSolution(x0, objective(x0), 0.0, SolveStatus.OPTIMAL)

    x = x0.copy()
    working: list[int] = []
    step_tol = 1e-11

    for _ in range(max_iter):
        grad = H @ x + c
        Z = _null_space(C[working], n)
        if Z.shape[1] == 0:
            p = np.zeros(n)
        else:
            reduced = Z.T @ H @ Z
            p = Z @ np.linalg.solve(reduced, -(Z.T @ grad))

        if np.max(np.abs(p), initial=0.0) <= step_tol * (1.0 + np.max(np.abs(x))):
            if not working:
                return finish(x, working, np.zeros(0), SolveStatus.OPTIMAL)
            lam_w, *_ = np.linalg.lstsq(C[working].T, -grad, rcond=None)
            negative = [j for j, v in enumerate(lam_w) if v < -opts.kkt_tol]
            if not negative:
                return finish(x, working, lam_w, SolveStatus.OPTIMAL)
            drop = min(negative, key=lambda j: working[j])  # Bland: smallest constraint index
            working.pop(drop)
            continue

        # ratio test against constraints outside the working set
        mask = np.ones(C.shape[0], dtype=bool)
        mask[working] = False
        Cp = C[mask] @ p
        slack = d[mask] - C[mask] @ x
        idx_all = np.flatnonzero(mask)
        alpha = 1.0
        blocking = -1
        denom_tol = 1e-14 * (1.0 + np.max(np.abs(p)))
        for row, cp, sl in zip(idx_all, Cp, slack):
            if cp > denom_tol:
                a = max(sl, 0.0) / cp
                if a < alpha - 1e-15:
                    alpha, blocking = a, row
        x = x + alpha * p
        if blocking >= 0:
            working.append(blocking)
            working.sort()

    lam_w = (
        np.linalg.lstsq(C[working].T, -(H @ x + c), rcond=None)[0] if working else np.zeros(0)
    )
    return finish(x, working, lam_w, SolveStatus.ITERATION_LIMIT)
