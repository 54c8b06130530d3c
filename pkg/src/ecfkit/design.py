"""Design matrices: construction from data, feasibility repair, and code length.

A design matrix holds the target inner products between class codewords: a
symmetric k-by-k matrix with diagonal equal to the code length scale ``l``
and off-diagonal entries in ``[-l, l]``. Targets near ``-l`` ask for far
apart codewords (much error correction for that pair); targets near ``l``
ask for similar ones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .errors import ConstantDistancesError, InputError


class AllocationPolicy(enum.Enum):
    """Where to spend correction capability: on confusable pairs or separable ones."""

    HARD = "hard"
    EASY = "easy"


@dataclass
class ClassDistanceMatrix:
    """Symmetric nonnegative inter-class distances with zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        k = self.values.shape[0]
        if self.values.shape != (k, k) or k < 2:
            raise InputError("distance matrix must be square with k >= 2")
        if not np.allclose(self.values, self.values.T, atol=1e-10):
            raise InputError("distance matrix must be symmetric")
        if np.any(np.diag(self.values) != 0):
            raise InputError("distance matrix diagonal must be zero")
        if np.any(self.values < 0):
            raise InputError("distances must be nonnegative")

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass
class DesignMatrix:
    """Target codeword inner products; diagonal pinned to the code length scale."""

    values: np.ndarray
    code_length_scale: int
    projection_converged: bool = field(default=True, compare=False)
    projection_cycles: int = field(default=0, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        l = self.code_length_scale
        k = self.values.shape[0]
        if l < 1:
            raise InputError("code length scale must be >= 1")
        if self.values.shape != (k, k):
            raise InputError("design matrix must be square")
        if not np.allclose(self.values, self.values.T, atol=1e-10):
            raise InputError("design matrix must be symmetric within 1e-10")
        if np.any(np.diag(self.values) != l):
            raise InputError(f"design matrix diagonal must equal {l} exactly")
        if np.any(np.abs(self.values) > l + 1e-9):
            raise InputError(f"design matrix entries must lie in [-{l}, {l}]")

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.values + self.values.T) / 2.0)[0])


def pairwise_mahalanobis(data: LabeledDataset) -> ClassDistanceMatrix:
    """Mahalanobis distance between class means under the pooled within-class covariance.

    The covariance gets a small ridge (1e-6 * trace / d) so it is always
    invertible. Every class needs at least two samples.
    """
    if data.k < 2:
        raise InputError("need at least 2 classes")
    counts = data.class_counts()
    lacking = np.flatnonzero(counts < 2) + 1
    if lacking.size:
        raise InputError(f"classes with fewer than 2 samples: {lacking.tolist()}")

    d = data.d
    means = np.zeros((data.k, d))
    scatter = np.zeros((d, d))
    for cls in range(1, data.k + 1):
        rows = data.features[data.labels == cls]
        mu = rows.mean(axis=0)
        means[cls - 1] = mu
        centered = rows - mu
        scatter += centered.T @ centered
    cov = scatter / (data.n - data.k)
    cov += (1e-6 * np.trace(cov) / d) * np.eye(d)

    diffs = means[:, None, :] - means[None, :, :]  # (k, k, d)
    solved = np.linalg.solve(cov, diffs.reshape(-1, d).T).T.reshape(data.k, data.k, d)
    sq = np.einsum("ijd,ijd->ij", diffs, solved)
    dist = np.sqrt(np.maximum(sq, 0.0))
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return ClassDistanceMatrix(dist)


def distances_to_design(M: ClassDistanceMatrix, l: int, policy: AllocationPolicy) -> DesignMatrix:
    """Map raw class distances to inner-product targets at scale ``l``.

    Distances are min-max normalized to u in [0, 1] over the off-diagonal.
    The hard policy sends close pairs to target ``-l`` (maximum separation
    where confusion is likely); the easy policy reverses the order and is
    clipped at ``l - 2`` so no pair is asked to share a codeword.
    """
    if l < 1:
        raise InputError("code length scale must be >= 1")
    values = M.values
    off = ~np.eye(M.k, dtype=bool)
    lo, hi = float(values[off].min()), float(values[off].max())
    if hi - lo <= 0:
        raise ConstantDistancesError("all off-diagonal distances are equal; cannot normalize")
    u = (values - lo) / (hi - lo)
    if policy is AllocationPolicy.HARD:
        target = l * (2.0 * u - 1.0)
    else:
        target = np.minimum(l * (1.0 - 2.0 * u), l - 2.0)
    out = np.where(off, target, float(l))
    out = (out + out.T) / 2.0
    np.fill_diagonal(out, l)
    return DesignMatrix(out, l)


def project_psd_scaled(D: np.ndarray | DesignMatrix, l: int, tol: float = 1e-9, max_iter: int = 1000) -> DesignMatrix:
    """Repair a symmetric matrix into a valid design matrix.

    Cycles three steps until the Frobenius change of a full cycle drops
    below ``tol``: project onto the PSD cone (zero out negative
    eigenvalues), clip entries to ``[-l, l]``, reset the diagonal to ``l``.
    A non-converged result is still returned, flagged on the output.
    """
    if l < 1:
        raise InputError("code length scale must be >= 1")
    A = np.asarray(D.values if isinstance(D, DesignMatrix) else D, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise InputError("input must be square")
    A = (A + A.T) / 2.0
    converged = False
    cycles = 0
    for cycles in range(1, max_iter + 1):
        before = A
        w, V = np.linalg.eigh(A)
        A = (V * np.maximum(w, 0.0)) @ V.T
        A = np.clip(A, -l, l)
        A = (A + A.T) / 2.0
        np.fill_diagonal(A, l)
        if np.linalg.norm(A - before) < tol:
            converged = True
            break
    return DesignMatrix(A, l, projection_converged=converged, projection_cycles=cycles)


def binary_gramian(k: int, l: int, seed: int) -> tuple[DesignMatrix, np.ndarray]:
    """Inner-product matrix of random sign vectors, plus the factor itself.

    Draws a k-by-l matrix with entries in {-1, +1} until both its rows and
    its columns are pairwise distinct, then returns (X0 @ X0.T, X0).
    """
    if k < 2 or l < 1:
        raise InputError("need k >= 2 and l >= 1")
    if 2**l < k:
        raise InputError(f"2^{l} < {k}: distinct rows are impossible")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        X0 = rng.integers(0, 2, size=(k, l)) * 2 - 1
        # regenerate colliding rows only; full redraws are hopeless when k nears 2^l
        for _ in range(10000):
            seen: dict[tuple, int] = {}
            dup = [i for i, r in enumerate(map(tuple, X0)) if seen.setdefault(r, i) != i]
            if not dup:
                break
            X0[dup] = rng.integers(0, 2, size=(len(dup), l)) * 2 - 1
        else:
            continue
        if len({tuple(c) for c in X0.T}) == l:
            D = (X0 @ X0.T).astype(float)
            return DesignMatrix(D, l), X0
    raise InputError(f"could not draw distinct rows and columns for k={k}, l={l}")


def code_length(D: DesignMatrix, rank_tol: float | None = None) -> int:
    """Numerical rank of the design matrix: the code length that permits a
    minimal-error factorization.

    Counts eigenvalues with magnitude above ``rank_tol`` times the largest
    magnitude; the default tolerance is ``1e-8 * k``.
    """
    w = np.linalg.eigvalsh((D.values + D.values.T) / 2.0)
    top = float(np.max(np.abs(w)))
    if top == 0.0:
        raise InputError("zero matrix has no usable rank")
    if rank_tol is None:
        rank_tol = 1e-8 * D.k
    return int(np.sum(np.abs(w) > rank_tol * top))
