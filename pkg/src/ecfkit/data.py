"""Dataset ingestion, synthetic data generation, fold utilities, and matrix file I/O."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

MATRIX_ROLES = ("design", "coding", "policy", "generic")


@dataclass
class LabeledDataset:
    """n samples with d real features and integer class labels in 1..k."""

    features: np.ndarray
    labels: np.ndarray
    k: int
    label_map: dict = field(default_factory=dict)  # original label -> 1..k, when remapped

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2:
            raise InputError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise InputError("labels must be a vector with one entry per sample")
        if not np.all(np.isfinite(self.features)):
            raise InputError("features contain non-finite values")
        present = np.unique(self.labels)
        if present.size == 0:
            raise InputError("dataset is empty")
        if present[0] < 1 or present[-1] > self.k:
            raise InputError(f"labels must lie in 1..{self.k}")
        if present.size != self.k:
            missing = sorted(set(range(1, self.k + 1)) - set(present.tolist()))
            raise InputError(f"classes with no samples: {missing}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.k, self.label_map)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k + 1)[1:]


def load_dataset_csv(path: str, label_column: str | int = "last") -> LabeledDataset:
    """Load a dataset from CSV; features are decimal text, the label sits in one column.

    An optional non-numeric first row is treated as a header. Labels are
    remapped to contiguous 1..k and the mapping is kept on the dataset.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read dataset file {path}: {exc}") from exc
    rows = [(lineno, row) for lineno, row in enumerate(rows, start=1) if any(c.strip() for c in row)]
    if not rows:
        raise InputError(f"{path}: empty dataset file")

    def parse_row(lineno, row):
        try:
            values = [float(c) for c in row]
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric entry ({exc})") from exc
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"{path}:{lineno}: non-finite entry")
        return values

    start = 0
    try:
        first = parse_row(*rows[0])
    except InputError:
        start = 1  # header row
        if len(rows) == 1:
            raise InputError(f"{path}: no data rows after header")
        first = parse_row(*rows[1])
        start = 1
    width = len(first)
    if width < 2:
        raise InputError(f"{path}: need at least one feature column and one label column")
    col = width - 1 if label_column == "last" else int(label_column)
    if not 0 <= col < width:
        raise InputError(f"{path}: label column {col} out of range for {width} columns")

    feats, raw_labels = [], []
    for lineno, row in rows[start:]:
        values = parse_row(lineno, row)
        if len(values) != width:
            raise InputError(f"{path}:{lineno}: expected {width} columns, found {len(values)}")
        raw = values[col]
        if raw != int(raw):
            raise InputError(f"{path}:{lineno}: label {raw!r} is not an integer")
        raw_labels.append(int(raw))
        feats.append([v for j, v in enumerate(values) if j != col])

    uniques = sorted(set(raw_labels))
    if len(uniques) < 2:
        raise InputError(f"{path}: need at least 2 classes, found {len(uniques)}")
    mapping = {orig: i + 1 for i, orig in enumerate(uniques)}
    labels = np.array([mapping[r] for r in raw_labels], dtype=int)
    return LabeledDataset(np.array(feats, dtype=float), labels, len(uniques), mapping)


def generate_toy(k: int = 14, per_class: int = 100, spread: float = 0.25, seed: int = 0) -> LabeledDataset:
    """Gaussian blobs in the plane with a shared standard deviation.

    Class means sit on a jittered square grid (unit spacing, jitter up to
    0.35 per coordinate), so some class pairs nearly touch while others are
    far apart. Fully deterministic in the seed.
    """
    if k < 2:
        raise InputError("need k >= 2 classes")
    if per_class < 1:
        raise InputError("need per_class >= 1")
    rng = np.random.default_rng(seed)
    side = math.ceil(math.sqrt(k))
    grid = np.array([(i % side, i // side) for i in range(k)], dtype=float)
    means = grid + rng.uniform(-0.35, 0.35, size=(k, 2))
    feats = np.vstack([means[c] + spread * rng.standard_normal((per_class, 2)) for c in range(k)])
    labels = np.repeat(np.arange(1, k + 1), per_class)
    return LabeledDataset(feats, labels, k)


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Assign each sample to a fold, round-robin per class after a seeded shuffle.

    Per class the fold sizes differ by at most one sample. Raises on any
    class smaller than the fold count.
    """
    labels = np.asarray(labels, dtype=int)
    if folds < 2:
        raise InputError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    assignment = np.empty(labels.shape[0], dtype=int)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < folds:
            raise InputError(f"class {cls} has {idx.size} samples, fewer than {folds} folds")
        idx = idx.copy()
        rng.shuffle(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return assignment


def _atomic_write(path: str, text: str):
    # write-then-rename keeps readers from ever seeing a partial file
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_role(matrix: np.ndarray, role: str, l: int | None):
    if role not in MATRIX_ROLES:
        raise InputError(f"unknown matrix role {role!r}; expected one of {MATRIX_ROLES}")
    if role in ("design", "policy"):
        if matrix.shape[0] != matrix.shape[1]:
            raise InputError(f"{role} matrix must be square, got shape {matrix.shape}")
        diag = np.diag(matrix)
        if l is not None:
            if not np.allclose(diag, l, atol=1e-9):
                raise InputError(f"{role} matrix diagonal must equal {l}")
        else:
            if not np.allclose(diag, diag[0], atol=1e-9) or diag[0] < 1:
                raise InputError(f"{role} matrix diagonal must be a constant >= 1 (the code length scale)")
    if role == "coding":
        if not np.all(np.isin(matrix, (-1.0, 1.0))):
            raise InputError("coding matrix entries must be -1 or +1")


def write_matrix_csv(path: str, matrix: np.ndarray, role: str = "generic"):
    """Write a matrix as comma-separated rows, one per line, no header.

    Coding matrices are written as integers and round-trip exactly; real
    matrices use 17 significant digits, which round-trips float64 exactly.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise InputError("only 2-D matrices are supported")
    _check_role(matrix, role, None)
    if role == "coding":
        lines = [",".join(str(int(v)) for v in row) for row in matrix]
    else:
        lines = [",".join(format(v, ".17g") for v in row) for row in matrix]
    _atomic_write(path, "\n".join(lines) + "\n")


def read_matrix_csv(path: str, role: str = "generic", l: int | None = None) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix_csv`, validating it for its role."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read matrix file {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}:{i + 1}: expected {width} columns, found {len(row)}")
        try:
            out[i] = [float(c) for c in row]
        except ValueError as exc:
            raise InputError(f"{path}:{i + 1}: non-numeric entry ({exc})") from exc
    if not np.all(np.isfinite(out)):
        raise InputError(f"{path}: non-finite entries")
    _check_role(out, role, l)
    if role == "coding":
        return out.astype(int)
    return out
