"""Coding-matrix analysis, decoding functions, and baseline coding generators.

A coding matrix assigns each class a row of {-1, +1} values (its codeword);
each column is a bipartition of the classes learned by one binary
classifier. Analysis here covers Hamming distance profiles, global and
pairwise error-correction capability, and validity reporting; decoding maps
a vector of binary predictions back to a class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CodingGenerationError, InputError


@dataclass
class CodingMatrix:
    """k class codewords of length l, entries in {-1, +1}."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=int)
        if self.values.ndim != 2:
            raise InputError("coding matrix must be 2-D")
        if not np.all(np.isin(self.values, (-1, 1))):
            raise InputError("coding matrix entries must be -1 or +1")

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def l(self) -> int:
        return self.values.shape[1]

    def rows_distinct(self) -> bool:
        return len({tuple(r) for r in self.values}) == self.k


@dataclass
class DistanceProfile:
    """Pairwise codeword disagreement counts (symmetric, zero diagonal)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=int)
        k = self.values.shape[0]
        if self.values.shape != (k, k):
            raise InputError("distance profile must be square")
        if np.any(self.values != self.values.T) or np.any(np.diag(self.values) != 0):
            raise InputError("distance profile must be symmetric with zero diagonal")

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass
class WeightMatrix:
    """Per-class decoding weights over dichotomies; rows sum to one."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise InputError("weights must be nonnegative")
        if not np.allclose(self.values.sum(axis=1), 1.0, atol=1e-10):
            raise InputError("weight rows must sum to 1")


@dataclass
class ValidationReport:
    rows_distinct: bool
    duplicate_row_pairs: list = field(default_factory=list)
    policy_violations: list = field(default_factory=list)  # (i, j, value, bound)
    duplicate_column_pairs: list = field(default_factory=list)  # (j1, j2, "equal"|"negated")
    valid: bool = True

    def to_dict(self) -> dict:
        return {
            "rows_distinct": self.rows_distinct,
            "duplicate_row_pairs": [list(p) for p in self.duplicate_row_pairs],
            "policy_violations": [list(p) for p in self.policy_violations],
            "duplicate_column_pairs": [list(p) for p in self.duplicate_column_pairs],
            "valid": self.valid,
        }


def hamming_profile(X: CodingMatrix) -> DistanceProfile:
    """Count disagreeing positions for every codeword pair.

    Equals ``(l - X @ X.T) / 2`` off the diagonal, since the inner product
    of two sign vectors is agreements minus disagreements.
    """
    inner = X.values @ X.values.T
    H = (X.l - inner) // 2
    np.fill_diagonal(H, 0)
    return DistanceProfile(H)


def global_correction(H: DistanceProfile) -> int:
    """Bit errors recoverable for any class pair: floor((min distance - 1) / 2)."""
    if H.k < 2:
        raise InputError("need at least two classes")
    off = H.values[~np.eye(H.k, dtype=bool)]
    return int((off.min() - 1) // 2)


def pairwise_correction(H: DistanceProfile, i: int, j: int) -> int:
    """Correction capability of the pair (i, j): floor((m - 1) / 2) with m the
    smallest off-diagonal entry in rows i and j of the profile."""
    if i == j:
        raise InputError("pairwise correction needs two distinct classes")
    entries = [H.values[i, a] for a in range(H.k) if a != i]
    entries += [H.values[j, a] for a in range(H.k) if a != j]
    return int((min(entries) - 1) // 2)


def pair_distance_correction(H: DistanceProfile, i: int, j: int) -> int:
    """Bit flips on codeword i that provably keep it closer to row i than to
    row j: floor((H[i, j] - 1) / 2). A direct two-row guarantee, independent
    of the rest of the profile."""
    if i == j:
        raise InputError("needs two distinct classes")
    return int((H.values[i, j] - 1) // 2)


def validate_coding(X: CodingMatrix, P=None) -> ValidationReport:
    """Report distinctness, policy compliance, and duplicate or negated columns.

    Rows being pairwise distinct is the hard requirement; everything else is
    reported as warnings and leaves the matrix usable.
    """
    dup_rows = [
        (i, j)
        for i in range(X.k)
        for j in range(i + 1, X.k)
        if np.array_equal(X.values[i], X.values[j])
    ]
    violations = []
    if P is not None:
        inner = X.values @ X.values.T
        bound = P.values
        for i in range(X.k):
            for j in range(i + 1, X.k):
                if inner[i, j] > bound[i, j] + 1e-9:
                    violations.append((i, j, int(inner[i, j]), float(bound[i, j])))
    dup_cols = []
    for a in range(X.l):
        for b in range(a + 1, X.l):
            if np.array_equal(X.values[:, a], X.values[:, b]):
                dup_cols.append((a, b, "equal"))
            elif np.array_equal(X.values[:, a], -X.values[:, b]):
                dup_cols.append((a, b, "negated"))
    return ValidationReport(
        rows_distinct=not dup_rows,
        duplicate_row_pairs=dup_rows,
        policy_violations=violations,
        duplicate_column_pairs=dup_cols,
        valid=not dup_rows,
    )


def decode_hamming(X: CodingMatrix, y: np.ndarray) -> int:
    """Class whose codeword disagrees with ``y`` in the fewest positions
    (smallest index on ties)."""
    y = np.asarray(y, dtype=int).ravel()
    if y.shape[0] != X.l:
        raise InputError(f"prediction codeword has length {y.shape[0]}, expected {X.l}")
    distances = (X.l - X.values @ y) // 2
    return int(np.argmin(distances))


def weight_matrix(X: CodingMatrix, per_class_accuracy: np.ndarray) -> WeightMatrix:
    """Row-normalize per-class dichotomizer accuracies; an all-zero row falls
    back to uniform weights."""
    acc = np.asarray(per_class_accuracy, dtype=float)
    if acc.shape != (X.k, X.l):
        raise InputError(f"accuracy matrix must be {X.k}x{X.l}")
    if np.any(acc < 0) or np.any(acc > 1):
        raise InputError("accuracies must lie in [0, 1]")
    sums = acc.sum(axis=1, keepdims=True)
    uniform = np.full_like(acc, 1.0 / X.l)
    with np.errstate(invalid="ignore", divide="ignore"):
        W = np.where(sums > 0, acc / np.where(sums > 0, sums, 1.0), uniform)
    return WeightMatrix(W)


def decode_loss_weighted(X: CodingMatrix, W: WeightMatrix, y: np.ndarray) -> int:
    """Class minimizing the weighted disagreement ``sum_j w_ij (1 - x_ij y_j) / 2``."""
    y = np.asarray(y, dtype=int).ravel()
    if y.shape[0] != X.l:
        raise InputError(f"prediction codeword has length {y.shape[0]}, expected {X.l}")
    if W.values.shape != (X.k, X.l):
        raise InputError("weight matrix shape does not match the coding matrix")
    losses = (W.values * (1.0 - X.values * y) / 2.0).sum(axis=1)
    return int(np.argmin(losses))


def ova_coding(k: int) -> CodingMatrix:
    """One-vs-all: +1 on the diagonal, -1 elsewhere."""
    if k < 2:
        raise InputError("need k >= 2")
    return CodingMatrix(2 * np.eye(k, dtype=int) - 1)


def _random_distinct_rows(rng: np.random.Generator, k: int, l: int, attempts: int = 10000) -> np.ndarray:
    for _ in range(attempts):
        X = rng.integers(0, 2, size=(k, l)) * 2 - 1
        if len({tuple(r) for r in X}) == k:
            return X
    raise CodingGenerationError(f"could not draw {k} distinct rows of length {l}")


def dense_random_coding(k: int, pool: int = 1000, seed: int = 0) -> CodingMatrix:
    """Best of ``pool`` random sign matrices of length ceil(10 log2 k),
    ranked by minimum pairwise row distance (first winner kept on ties)."""
    if k < 2 or pool < 1:
        raise InputError("need k >= 2 and pool >= 1")
    l = math.ceil(10 * math.log2(k))
    rng = np.random.default_rng(seed)
    best, best_min = None, -1
    for _ in range(pool):
        X = _random_distinct_rows(rng, k, l)
        H = hamming_profile(CodingMatrix(X))
        m = int(H.values[~np.eye(k, dtype=bool)].min())
        if m > best_min:
            best, best_min = X, m
    return CodingMatrix(best)


def fixed_correction_random_coding(k: int, l: int, c: int, seed: int = 0, attempts: int = 1000) -> CodingMatrix:
    """Rejection-sample sign matrices until the minimum pairwise row distance
    reaches ``c``; raises with the best candidate attached if the budget runs out."""
    if c < 1:
        raise InputError("need c >= 1")
    if 2**l < k:
        raise InputError(f"2^{l} < {k}: distinct rows are impossible")
    rng = np.random.default_rng(seed)
    best, best_min = None, -1
    for _ in range(attempts):
        X = rng.integers(0, 2, size=(k, l)) * 2 - 1
        H = (l - X @ X.T) // 2
        m = int(H[~np.eye(k, dtype=bool)].min())
        if m >= c:
            return CodingMatrix(X)
        if m > best_min:
            best, best_min = X, m
    raise CodingGenerationError(
        f"no draw reached min distance {c} in {attempts} attempts (best: {best_min})",
        best=CodingMatrix(best) if best_min >= 1 else None,
        best_min_distance=best_min,
    )
