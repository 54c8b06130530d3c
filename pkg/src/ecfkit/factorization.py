"""Factorization of a design matrix into a discrete coding matrix.

Block coordinate descent over codeword rows: each row in turn is replaced
by the solution of a box- and inequality-constrained least-squares problem
against the matching design column, cycling until the objective stalls.
The relaxed factor is then discretized by a threshold scan and duplicate
columns are projected out.

A note on objectives. The row subproblem minimizes the residual of row i
against all *other* rows, i.e. the off-diagonal mass of
``||D - X X^T||_F^2``; the diagonal mismatch ``(l - ||x^i||^2)^2`` is not
part of any row subproblem and may move either way during a sweep. The
per-update and per-cycle traces therefore record the pairwise
(off-diagonal) residual, which exact row solves never increase from a
feasible state, while ``relaxed_objective`` and ``discrete_objective``
report the full Frobenius residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import DesignMatrix
from .ecoc import CodingMatrix
from .errors import InfeasibleRowError, InputError
from .solver import ConstrainedLsProblem, SolveStatus, SolverOptions, solve_box_lin_ls


@dataclass
class CorrectionPolicy:
    """Upper bounds on codeword inner products; small bounds force large distances."""

    values: np.ndarray
    l: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        k = self.values.shape[0]
        if self.values.shape != (k, k):
            raise InputError("policy matrix must be square")
        if not np.allclose(self.values, self.values.T, atol=1e-10):
            raise InputError("policy matrix must be symmetric")
        if np.any(np.diag(self.values) != self.l):
            raise InputError(f"policy diagonal must equal {self.l}")
        off = self.values[~np.eye(k, dtype=bool)]
        if off.size and (off.min() < -self.l or off.max() > self.l - 1):
            raise InputError(f"off-diagonal policy entries must lie in [{-self.l}, {self.l - 1}]")

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass
class EcfOptions:
    seed: int = 0
    max_cycles: int = 100
    rel_tol: float = 1e-8
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class FactorizationResult:
    coding: CodingMatrix
    relaxed: np.ndarray
    objective_trace: list[float]  # pairwise residual, one entry per completed cycle
    update_trace: list[float]  # pairwise residual after every row update
    relaxed_objective: float
    discrete_objective: float
    threshold: float
    cycles: int
    converged: bool


@dataclass
class ErrorDecomposition:
    total: float
    optimization_error: float
    discretization_error: float
    cross_term: float


def make_policy(k: int, l: int, c: int) -> CorrectionPolicy:
    """Policy demanding a minimum pairwise codeword distance of ``c``:
    every off-diagonal inner-product bound is ``l - c``."""
    if not 1 <= c <= l:
        raise InputError(f"need 1 <= c <= l, got c={c}, l={l}")
    values = np.full((k, k), float(l - c))
    np.fill_diagonal(values, float(l))
    return CorrectionPolicy(values, l)


def objective(D: DesignMatrix, X: np.ndarray) -> float:
    """Full Frobenius residual ``||D - X X^T||_F^2``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != D.k:
        raise InputError(f"factor must have {D.k} rows")
    R = D.values - X @ X.T
    return float(np.sum(R * R))


def pairwise_objective(D: DesignMatrix, X: np.ndarray) -> float:
    """Off-diagonal part of the Frobenius residual; the quantity row updates descend."""
    X = np.asarray(X, dtype=float)
    R = D.values - X @ X.T
    np.fill_diagonal(R, 0.0)
    return float(np.sum(R * R))


def _row_problem(D: DesignMatrix, P: CorrectionPolicy, X: np.ndarray, i: int) -> ConstrainedLsProblem:
    others = np.arange(D.k) != i
    A = X[others]
    return ConstrainedLsProblem(
        A=A,
        b=D.values[others, i],
        G=A,
        h=P.values[others, i],
        lower=-np.ones(X.shape[1]),
        upper=np.ones(X.shape[1]),
    )


def _solve_row(D: DesignMatrix, P: CorrectionPolicy, X: np.ndarray, i: int, opts: SolverOptions):
    sol = solve_box_lin_ls(_row_problem(D, P, X, i), opts)
    if sol.status is SolveStatus.INFEASIBLE:
        raise InfeasibleRowError(i)
    return sol


def update_row(D: DesignMatrix, P: CorrectionPolicy, X: np.ndarray, i: int, opts: SolverOptions | None = None) -> np.ndarray:
    """Optimal replacement for row ``i`` of the factor, all other rows fixed."""
    if not 0 <= i < D.k:
        raise InputError(f"row index {i} out of range")
    return _solve_row(D, P, np.asarray(X, dtype=float), i, opts or SolverOptions()).x


def apply_row_updates(D: DesignMatrix, P: CorrectionPolicy, X: np.ndarray, rows, opts: SolverOptions) -> list[float]:
    """Run row updates in the given order, mutating ``X``; returns the pairwise
    residual after each update.

    A replacement that an iteration-limited solve left worse than a
    still-feasible current row is discarded, so the trace stays monotone
    whenever the solver reports optima.
    """
    trace = []
    feas_scale = max(1.0, float(np.max(np.abs(P.values))))
    for i in rows:
        sol = _solve_row(D, P, X, i, opts)
        if sol.status is not SolveStatus.OPTIMAL:
            others = np.arange(D.k) != i
            old = X[i]
            old_feasible = np.all(X[others] @ old <= P.values[others, i] + opts.feas_tol * feas_scale)
            residual = X[others] @ old - D.values[others, i]
            if old_feasible and float(residual @ residual) <= sol.objective:
                trace.append(pairwise_objective(D, X))
                continue
        X[i] = sol.x
        trace.append(pairwise_objective(D, X))
    return trace


def factorize(D: DesignMatrix, P: CorrectionPolicy, l: int, opts: EcfOptions | None = None) -> FactorizationResult:
    """Factor the design matrix into a coding matrix honoring the policy.

    Starts from a uniform random factor in ``[-1, 1]`` drawn from the seed,
    sweeps rows 1..k in fixed cyclic order, and stops once the relative
    per-cycle decrease of the pairwise residual falls below ``rel_tol`` or
    the cycle cap is hit. The relaxed factor is then discretized and
    duplicate columns are removed.
    """
    opts = opts or EcfOptions()
    k = D.k
    if l < 1:
        raise InputError("need l >= 1")
    if 2**l < k:
        raise InputError(f"2^{l} < {k}: distinct codewords are impossible")
    if P.k != k or P.l != l:
        raise InputError("policy does not match the design matrix and code length")

    rng = np.random.default_rng(opts.seed)
    X = rng.uniform(-1.0, 1.0, size=(k, l))

    update_trace: list[float] = []
    cycle_trace: list[float] = []
    previous = None  # decrease is measured between consecutive completed cycles
    converged = False
    cycles = 0
    for cycles in range(1, opts.max_cycles + 1):
        update_trace.extend(apply_row_updates(D, P, X, range(k), opts.solver))
        current = update_trace[-1]
        cycle_trace.append(current)
        if previous is not None and (previous <= 0.0 or (previous - current) / previous < opts.rel_tol):
            converged = True
            break
        previous = current

    relaxed = np.clip(X, -1.0, 1.0)
    relaxed_objective = objective(D, relaxed)
    coding, threshold = discretize(relaxed, D, relaxed_objective)
    coding = dedup_columns(coding)
    return FactorizationResult(
        coding=coding,
        relaxed=relaxed,
        objective_trace=cycle_trace,
        update_trace=update_trace,
        relaxed_objective=relaxed_objective,
        discrete_objective=objective(D, coding.values.astype(float)),
        threshold=threshold,
        cycles=cycles,
        converged=converged,
    )


def discretize(relaxed: np.ndarray, D: DesignMatrix, relaxed_objective: float) -> tuple[CodingMatrix, float]:
    """Threshold the relaxed factor at the grid point whose discrete objective
    is closest to the relaxed one.

    Scans 1000 evenly spaced thresholds across ``[-1, +1]``; entries at or
    above the threshold become +1. Ties go to the smallest threshold.
    """
    relaxed = np.asarray(relaxed, dtype=float)
    if np.any(np.abs(relaxed) > 1.0 + 1e-12):
        raise InputError("relaxed factor entries must lie in [-1, +1]")
    best_gap, best_X, best_t = np.inf, None, 0.0
    for m in range(1000):
        t = -1.0 + 2.0 * m / 999.0
        X_t = np.where(relaxed >= t, 1, -1)
        gap = abs(relaxed_objective - objective(D, X_t.astype(float)))
        if gap < best_gap:
            best_gap, best_X, best_t = gap, X_t, t
    return CodingMatrix(best_X), best_t


def dedup_columns(X: CodingMatrix) -> CodingMatrix:
    """Drop columns equal to, or the negation of, an earlier kept column.

    Both cases induce the same class bipartition. Errors if the surviving
    matrix has duplicate rows (only possible when the input already had
    them, since dropped columns carry no extra row information).
    """
    kept: list[int] = []
    for j in range(X.l):
        col = X.values[:, j]
        dup = any(
            np.array_equal(col, X.values[:, a]) or np.array_equal(col, -X.values[:, a]) for a in kept
        )
        if not dup:
            kept.append(j)
    out = CodingMatrix(X.values[:, kept])
    if not out.rows_distinct():
        raise InputError("deduplication would leave duplicate codewords")
    return out


def error_decomposition(result: FactorizationResult, D: DesignMatrix, D_B: DesignMatrix) -> ErrorDecomposition:
    """Split the relaxed residual against ``D`` into the part reachable by any
    discrete factor (distance to the nearest sign Gramian ``D_B``), the
    distance of ``D`` itself from that Gramian, and their cross term."""
    if D.k != D_B.k or result.relaxed.shape[0] != D.k:
        raise InputError("dimension mismatch between result and design matrices")
    G = result.relaxed @ result.relaxed.T
    opt = float(np.sum((G - D_B.values) ** 2))
    disc = float(np.sum((D.values - D_B.values) ** 2))
    cross = -2.0 * float(np.trace((G - D_B.values) @ (D.values - D_B.values)))
    total = float(np.sum((G - D.values) ** 2))
    return ErrorDecomposition(total, opt, disc, cross)
