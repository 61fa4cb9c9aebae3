"""Length-square sampling storage for vectors and matrices, plus dataset I/O.

Every vector is kept in a complete binary tree whose leaves hold squared
entries and whose internal nodes hold partial sums.  Drawing an index is a
root-to-leaf descent, so it costs ``ceil(log2 n)`` node visits.  A matrix
keeps one tree per row *and* one tree per column, plus trees over the row
norms and the column norms, so both row-major and column-major sampling are
available.

Trees of equal length are stacked into a single 2-D array (a "forest") so a
batch of draws from different rows can descend in lock-step with numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError, DegenerateDistributionError


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class _Forest:
    """``k`` sum-trees of a common length ``n`` stored in one array."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ValueError("forest expects a 2-D array")
        k, n = values.shape
        self.n = n
        self.depth = (n - 1).bit_length() if n > 1 else 0
        self.size = 1 << self.depth
        self.values = values
        tree = np.zeros((k, 2 * self.size))
        tree[:, self.size:self.size + n] = values * values
        # pairwise (tree-shaped) accumulation, one level at a time
        lo = self.size
        while lo > 1:
            half = lo // 2
            tree[:, half:lo] = tree[:, lo:2 * lo:2] + tree[:, lo + 1:2 * lo:2]
            lo = half
        self.tree = tree
        self.visits = 0

    @property
    def totals(self):
        return self.tree[:, 1]

    def descend(self, which, u):
        """Leaf index for each (tree ``which[t]``, uniform ``u[t]``) pair.

        ``u`` is in [0, 1).  Zero-weight leaves are never returned; a
        cumulative weight exactly equal to the target goes left.
        """
        which = np.asarray(which, dtype=np.intp)
        # flat gathers are cheaper than 2-D fancy indexing
        flat = self.tree.ravel()
        base = which * self.tree.shape[1]
        target = np.asarray(u, dtype=float) * flat[base + 1]
        node = np.ones(target.shape, dtype=np.intp)
        for _ in range(self.depth):
            li = base + 2 * node
            left = flat[li]
            right = flat[li + 1]
            go_right = ((target > left) & (right > 0)) | (left <= 0)
            target = np.where(go_right, target - left, target)
            node = 2 * node + go_right
        self.visits += self.depth * target.size
        return node - self.size


class SampleTree:
    """Length-square sampler over one real vector.

    ``P[i] = values[i]**2 / total``.  Instances are immutable views into a
    forest; :func:`build_tree` makes a standalone one.
    """

    def __init__(self, forest, row=0):
        self._forest = forest
        self._row = row

    @property
    def values(self):
        return self._forest.values[self._row]

    @property
    def total(self):
        return float(self._forest.tree[self._row, 1])

    @property
    def depth(self):
        return self._forest.depth

    @property
    def visits(self):
        return self._forest.visits

    def __len__(self):
        return self._forest.n

    def query(self, i):
        self._forest.visits += 1
        return self._forest.values[self._row, i]

    def probabilities(self):
        w = self.values ** 2
        return w / self.total

    def sample(self, rng, size=None):
        if not self.total > 0:
            raise DegenerateDistributionError("cannot sample from an all-zero vector")
        rng = _as_rng(rng)
        n = 1 if size is None else int(size)
        u = rng.random(n)
        out = self._forest.descend(np.full(n, self._row), u)
        return int(out[0]) if size is None else out


def build_tree(values):
    """Build a :class:`SampleTree` over a non-empty finite sequence."""
    v = np.array(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot build a sample tree over an empty sequence")
    if not np.all(np.isfinite(v)):
        raise ValueError("sample tree values must be finite")
    return SampleTree(_Forest(v[None, :]))


def sample_index(tree, rng):
    """One length-square draw from ``tree``."""
    return tree.sample(rng)


class SampledMatrix:
    """Dense real matrix with row- and column-oriented sample trees.

    Besides the trees, this class implements the sampling-access protocol the
    estimators rely on: ``frob``, ``frob_sq``, ``col_norms``,
    ``sample_entries``, ``sample_column_indices``, ``sample_in_columns``,
    ``query``, ``column`` and ``embed_query``.
    """

    def __init__(self, entries):
        X = np.array(entries, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("matrix entries must be finite")
        X.setflags(write=False)
        self.entries = X
        self.n_rows, self.m_cols = X.shape
        self._rows = _Forest(X)
        self._cols = _Forest(X.T.copy())
        self.row_norms = np.sqrt(self._rows.totals.copy())
        self.col_norms = np.sqrt(self._cols.totals.copy())
        self.row_norm_tree = build_tree(self.row_norms)
        self.col_norm_tree = build_tree(self.col_norms)
        self.frob_sq = self.col_norm_tree.total
        self.frob = math.sqrt(self.frob_sq)

    @property
    def shape(self):
        return self.entries.shape

    def row_tree(self, i):
        return SampleTree(self._rows, i)

    def col_tree(self, j):
        return SampleTree(self._cols, j)

    def query(self, i, j):
        return self._rows.values[i, j]

    def query_col_major(self, i, j):
        return self._cols.values[j, i]

    @property
    def visits(self):
        return (self._rows.visits + self._cols.visits
                + self.row_norm_tree.visits + self.col_norm_tree.visits)

    def _check_nonzero(self):
        if not self.frob_sq > 0:
            raise DegenerateDistributionError("cannot sample from an all-zero matrix")

    def sample_entries(self, rng, size):
        """Draw ``size`` pairs ``(i, j)`` with probability ``X_ij**2 / ||X||_F**2``.

        Row from the row-norm tree, then column from that row's tree.
        Returns ``(i, j, X[i, j])``.
        """
        self._check_nonzero()
        rng = _as_rng(rng)
        i = self.row_norm_tree._forest.descend(np.zeros(size, dtype=np.intp), rng.random(size))
        j = self._rows.descend(i, rng.random(size))
        return i, j, self._rows.values[i, j]

    def sample_entries_by_column(self, rng, size):
        self._check_nonzero()
        rng = _as_rng(rng)
        j = self.sample_column_indices(rng, size)
        i = self._cols.descend(j, rng.random(size))
        return i, j, self._cols.values[j, i]

    def sample_column_indices(self, rng, size):
        self._check_nonzero()
        rng = _as_rng(rng)
        return self.col_norm_tree._forest.descend(np.zeros(size, dtype=np.intp), rng.random(size))

    def sample_in_columns(self, cols, rng):
        rng = _as_rng(rng)
        cols = np.asarray(cols, dtype=np.intp)
        if np.any(self.col_norms[cols] <= 0):
            raise DegenerateDistributionError("cannot sample inside an all-zero column")
        return self._cols.descend(cols, rng.random(cols.shape))

    def sample_in_rows(self, rows, rng):
        rng = _as_rng(rng)
        rows = np.asarray(rows, dtype=np.intp)
        return self._rows.descend(rows, rng.random(rows.shape))

    def column(self, j):
        return ColumnAccess(self, j)

    def embed_query(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_rows,):
            raise ValueError(f"query vector must have length {self.n_rows}")
        return (lambda i: x[i]), float(np.linalg.norm(x))


def build_matrix(entries):
    return SampledMatrix(entries)


class ColumnAccess:
    """Sampling access to one column ``X e_p`` viewed as an n x 1 matrix."""

    def __init__(self, parent, p):
        self.parent = parent
        self.p = int(p)
        self.frob = float(parent.col_norms[self.p])
        self.frob_sq = self.frob ** 2

    def sample_entries(self, rng, size):
        if not self.frob_sq > 0:
            raise DegenerateDistributionError("cannot sample from an all-zero column")
        cols = np.full(size, self.p, dtype=np.intp)
        i = self.parent.sample_in_columns(cols, rng)
        return i, np.zeros(size, dtype=np.intp), self.parent.query(i, cols)


@dataclass
class LabeledDataset:
    """Feature matrix (features x points), +-1 labels and a train/test split."""

    X: SampledMatrix
    y: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.train_idx = np.asarray(self.train_idx, dtype=np.intp)
        self.test_idx = np.asarray(self.test_idx, dtype=np.intp)
        m = self.X.m_cols
        if self.y.shape != (m,):
            raise ValueError(f"expected {m} labels, got {self.y.shape}")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        both = np.concatenate([self.train_idx, self.test_idx])
        if both.size != m or not np.array_equal(np.sort(both), np.arange(m)):
            raise ValueError("train/test split must partition the points")
        ytr = self.y[self.train_idx]
        if not (np.any(ytr > 0) and np.any(ytr < 0)):
            raise ValueError("training split must contain both classes")

    @property
    def n(self):
        return self.X.n_rows

    @property
    def m(self):
        return self.X.m_cols

    def train_matrix(self):
        return SampledMatrix(self.X.entries[:, self.train_idx])

    def split(self, name):
        if name == "train":
            return self.train_idx
        if name == "test":
            return self.test_idx
        if name == "all":
            return np.arange(self.m)
        raise ValueError(f"unknown split {name!r}")


# -- file formats ----------------------------------------------------------
#
# X.txt      "n m" then n lines of m reals (row i = feature i across points)
# y.txt      m lines, each "+1", "1" or "-1"
# split.txt  m lines, each "train" or "test"

MATRIX_FILE = "X.txt"
LABELS_FILE = "y.txt"
SPLIT_FILE = "split.txt"


def write_matrix(path, X):
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    with open(path, "w") as fh:
        fh.write(f"{n} {m}\n")
        for row in X.tolist():
            fh.write(" ".join(repr(v) for v in row))
            fh.write("\n")


def read_matrix(path):
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError("empty matrix file, expected header 'n m'", path, 1)
    head = lines[0].split()
    try:
        if len(head) != 2:
            raise ValueError
        n, m = int(head[0]), int(head[1])
        if n < 1 or m < 1:
            raise ValueError
    except ValueError:
        raise DatasetFormatError(f"malformed header {lines[0]!r}, expected 'n m'", path, 1) from None
    body = [ln for ln in lines[1:]]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != n:
        raise DatasetFormatError(f"count mismatch: header says {n} rows, found {len(body)}",
                                 path, len(body) + 2 if len(body) < n else n + 2)
    X = np.empty((n, m))
    for k, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != m:
            raise DatasetFormatError(f"count mismatch: expected {m} values, found {len(parts)}",
                                     path, k + 2)
        try:
            X[k] = [float(p) for p in parts]
        except ValueError:
            raise DatasetFormatError(f"invalid number in {ln!r}", path, k + 2) from None
    if not np.all(np.isfinite(X)):
        raise DatasetFormatError("non-finite entry", path)
    return X


def read_labels(path, m=None):
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    y = np.empty(len(lines))
    for k, ln in enumerate(lines):
        tok = ln.strip()
        if tok in ("+1", "1"):
            y[k] = 1.0
        elif tok == "-1":
            y[k] = -1.0
        else:
            raise DatasetFormatError(f"invalid label {tok!r}", path, k + 1)
    if m is not None and len(y) != m:
        raise DatasetFormatError(f"count mismatch: expected {m} labels, found {len(y)}", path,
                                 len(lines) + 1)
    return y


def write_labels(path, y):
    with open(path, "w") as fh:
        for v in np.asarray(y).tolist():
            fh.write("1\n" if v > 0 else "-1\n")


def read_split(path, m):
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) != m:
        raise DatasetFormatError(f"count mismatch: expected {m} split entries, found {len(lines)}",
                                 path, len(lines) + 1)
    train, test = [], []
    for k, ln in enumerate(lines):
        tok = ln.strip()
        if tok == "train":
            train.append(k)
        elif tok == "test":
            test.append(k)
        else:
            raise DatasetFormatError(f"invalid split tag {tok!r}", path, k + 1)
    return np.array(train, dtype=np.intp), np.array(test, dtype=np.intp)


def write_split(path, m, train_idx):
    tags = np.array(["test"] * m, dtype=object)
    tags[np.asarray(train_idx, dtype=np.intp)] = "train"
    with open(path, "w") as fh:
        fh.write("\n".join(tags.tolist()) + "\n")


def load_dataset(matrix_path, labels_path, split_path=None):
    """Read a dataset.  Without a split file every point is for training."""
    X = read_matrix(matrix_path)
    y = read_labels(labels_path, X.shape[1])
    if split_path is not None and Path(split_path).exists():
        train, test = read_split(split_path, X.shape[1])
    else:
        train, test = np.arange(X.shape[1]), np.array([], dtype=np.intp)
    return LabeledDataset(SampledMatrix(X), y, train, test)


def save_dataset(data, matrix_path, labels_path, split_path=None):
    write_matrix(matrix_path, data.X.entries)
    write_labels(labels_path, data.y)
    if split_path is not None:
        write_split(split_path, data.m, data.train_idx)


def load_dataset_dir(directory):
    d = Path(directory)
    return load_dataset(d / MATRIX_FILE, d / LABELS_FILE, d / SPLIT_FILE)


def save_dataset_dir(data, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_dataset(data, d / MATRIX_FILE, d / LABELS_FILE, d / SPLIT_FILE)
