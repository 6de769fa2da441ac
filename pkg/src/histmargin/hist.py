"""Histogram classifiers on a cube partition.

A classifier stores one signed vote per cell and predicts ``+1`` where the
vote is ``>= 0``. Cells without a stored vote fall back to ``default_label``,
which is ``+1`` for fitted classifiers since an empty cell has vote 0.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import (
    CapacityError,
    DatasetFormatError,
    DimensionError,
    EmptySampleError,
    PreconditionError,
)
from .grid import (
    GridSpec,
    axis_thresholds,
    cell_indices,
    cells_meeting_X,
    keys_to_indices,
    linear_keys,
)
from .synth import LabeledSample, SyntheticFamily

ERM_CELL_CAP = 20
# A dense bincount over the cell box is used when it is at most this many
# times larger than the sample.
_DENSE_FACTOR = 8


class HistogramClassifier:
    """Cellwise sign classifier.

    Parameters
    ----------
    grid : GridSpec
    keys : array of int64
        Row-major linear keys (see :func:`grid.linear_keys`) of the stored cells.
    votes : array of float
        Vote of each stored cell; label is ``+1`` iff vote ``>= 0``.
    default_label : {-1, +1}
    """

    def __init__(self, grid: GridSpec, keys, votes, default_label: int = 1):
        keys = np.asarray(keys, dtype=np.int64).reshape(-1)
        votes = np.asarray(votes, dtype=float).reshape(-1)
        if keys.shape != votes.shape:
            raise PreconditionError("keys and votes differ in length")
        if default_label not in (-1, 1):
            raise PreconditionError("default_label must be -1 or +1")
        order = np.argsort(keys, kind="stable")
        keys, votes = keys[order], votes[order]
        if keys.size and (keys[0] < 0 or np.any(np.diff(keys) == 0)):
            raise PreconditionError("cell keys must be distinct cells meeting X")
        self.grid = grid
        self.keys = keys
        self.votes = votes
        self.default_label = int(default_label)
        self.keys.setflags(write=False)
        self.votes.setflags(write=False)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_cells(cls, grid: GridSpec, cells, votes, default_label: int = 1):
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, grid.d)
        keys = linear_keys(cells, grid)
        return cls(grid, keys, votes, default_label)

    @classmethod
    def from_labels(cls, grid: GridSpec, cells, labels, default_label: int = 1):
        """Classifier with the given labels (stored as votes of +-1)."""
        return cls.from_cells(grid, cells, np.asarray(labels, dtype=float), default_label)

    @classmethod
    def constant(cls, grid: GridSpec, label: int):
        cells = cells_meeting_X(grid)
        return cls.from_labels(grid, cells, np.full(len(cells), label))

    # -- views ----------------------------------------------------------------

    @property
    def cells(self) -> np.ndarray:
        return keys_to_indices(self.keys, self.grid)

    @property
    def labels(self) -> np.ndarray:
        return np.where(self.votes >= 0.0, 1, -1)

    def vote_map(self) -> dict:
        return {tuple(int(k) for k in c): float(v) for c, v in zip(self.cells, self.votes)}

    def label_map(self) -> dict:
        return {tuple(int(k) for k in c): int(l) for c, l in zip(self.cells, self.labels)}

    def __len__(self):
        return self.keys.shape[0]

    def __eq__(self, other):
        if not isinstance(other, HistogramClassifier):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.default_label == other.default_label
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.votes, other.votes)
        )

    def __repr__(self):
        return (f"HistogramClassifier(d={self.grid.d}, s={self.grid.s}, "
                f"cells={len(self)}, default_label={self.default_label})")

    # -- prediction -----------------------------------------------------------

    def label_of_keys(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        if self.keys.size == 0:
            return np.full(keys.shape, self.default_label, dtype=np.int64)
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, self.keys.size - 1)
        hit = (self.keys[pos] == keys) & (keys >= 0)
        return np.where(hit, np.where(self.votes[pos] >= 0.0, 1, -1), self.default_label)

    def label_of_cells(self, cells) -> np.ndarray:
        return self.label_of_keys(linear_keys(cells, self.grid))

    def predict(self, x) -> np.ndarray:
        idx = cell_indices(x, self.grid)
        return self.label_of_keys(linear_keys(idx, self.grid))

    # -- serialization --------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"s={self.grid.s!r}", f"d={self.grid.d}"]
        if self.grid.offset != 0.0:
            lines.append(f"offset={self.grid.offset!r}")
        lines.append(f"default_label={self.default_label}")
        for cell, vote in zip(self.cells, self.votes):
            lines.append(",".join(str(int(k)) for k in cell) + f":{float(vote)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HistogramClassifier":
        header = {}
        cells, votes = [], []
        for row_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line and ":" not in line:
                key, _, value = line.partition("=")
                header[key.strip()] = value.strip()
                continue
            if not {"s", "d", "default_label"} <= header.keys():
                raise DatasetFormatError("cell line before s, d and default_label", row_no)
            idx, sep, vote = line.partition(":")
            try:
                cell = [int(k) for k in idx.split(",")]
                v = float(vote)
            except ValueError:
                raise DatasetFormatError(f"cannot parse cell line {line!r}", row_no) from None
            if not sep or len(cell) != int(header["d"]) or not math.isfinite(v):
                raise DatasetFormatError(f"malformed cell line {line!r}", row_no)
            cells.append(cell)
            votes.append(v)
        try:
            grid = GridSpec(d=int(header["d"]), s=float(header["s"]),
                            offset=float(header.get("offset", 0.0)))
            default = int(header["default_label"])
        except KeyError as exc:
            raise DatasetFormatError(f"model header lacks {exc.args[0]!r}") from None
        except ValueError as exc:
            raise DatasetFormatError(f"bad model header: {exc}") from None
        cells_arr = np.array(cells, dtype=np.int64).reshape(-1, grid.d)
        keys = linear_keys(cells_arr, grid)
        if np.any(keys < 0):
            raise DatasetFormatError("model lists a cell that does not meet X")
        return cls(grid, keys, votes, default)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "HistogramClassifier":
        with open(path) as fh:
            return cls.from_text(fh.read())


# -- fitting ------------------------------------------------------------------

def cell_counts(sample: LabeledSample, grid: GridSpec):
    """Occupied cell keys with their ``#(+1)`` and ``#(-1)`` counts (int64)."""
    if sample.d != grid.d:
        raise DimensionError(f"sample has d={sample.d}, grid has d={grid.d}")
    keys = linear_keys(cell_indices(sample.points, grid), grid)
    plus = sample.labels > 0
    if grid.n_cells_X <= _DENSE_FACTOR * max(len(sample), 1024):
        # one pass: slot 2k counts the -1 labels of cell k, slot 2k + 1 the +1 labels
        both = np.bincount(2 * keys + plus, minlength=2 * grid.n_cells_X).reshape(-1, 2)
        n_minus, n_plus = both[:, 0], both[:, 1]
        occupied = np.flatnonzero(n_plus + n_minus)
        return occupied.astype(np.int64), n_plus[occupied], n_minus[occupied]
    uniq, inv = np.unique(keys, return_inverse=True)
    n_plus = np.bincount(inv[plus], minlength=uniq.size)
    n_minus = np.bincount(inv[~plus], minlength=uniq.size)
    return uniq, n_plus, n_minus


def fit(sample: LabeledSample, grid: GridSpec) -> HistogramClassifier:
    """Empirical histogram rule: vote = (#plus - #minus) / n per occupied cell."""
    if len(sample) == 0:
        raise EmptySampleError("cannot fit on an empty sample")
    keys, n_plus, n_minus = cell_counts(sample, grid)
    votes = (n_plus - n_minus) / len(sample)
    return HistogramClassifier(grid, keys, votes, default_label=1)


def cell_votes_exact(family: SyntheticFamily, grid: GridSpec, cells) -> np.ndarray:
    """``int_{A_j ∩ X} (2 eta - 1) dP_X`` for each row of ``cells``."""
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, grid.d)
    lower = grid.offset + cells * grid.s
    upper = lower + grid.s
    lo = np.clip(lower, -1.0, 1.0)
    hi = np.clip(upper, -1.0, 1.0)
    other = np.prod((hi[:, 1:] - lo[:, 1:]) / 2.0, axis=1)
    g = family.abs_noise_tail
    # sign(x)|x|^gamma p_1(x) has the even antiderivative G(|x|)
    votes = other * (g(np.abs(hi[:, 0])) - g(np.abs(lo[:, 0])))
    if family.kind == "far_noise":
        for i in range(cells.shape[0]):
            votes[i] -= family.bump_integral(lower[i], upper[i])
    return votes


def infinite_sample_fit(family: SyntheticFamily, grid: GridSpec) -> HistogramClassifier:
    """Histogram rule built from the true per-cell signed mass ``f_{P,s}``."""
    if family.d != grid.d:
        raise PreconditionError("family and grid dimensions differ")
    cells = cells_meeting_X(grid)
    return HistogramClassifier.from_cells(grid, cells, cell_votes_exact(family, grid, cells))


# -- ERM check ----------------------------------------------------------------

def region_keys(region, grid: GridSpec) -> np.ndarray:
    if isinstance(region, np.ndarray):
        cells = region
    else:
        cells = list(region)
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, grid.d)
    keys = linear_keys(cells, grid)
    return np.unique(keys[keys >= 0])


def erm_verify(c: HistogramClassifier, sample: LabeledSample, region=None,
               max_cells: int = ERM_CELL_CAP) -> bool:
    """Whether ``c`` minimises the (region-restricted) empirical risk over all
    cellwise labelings, by exhaustive enumeration of the occupied cells."""
    keys, n_plus, n_minus = cell_counts(sample, c.grid)
    if region is not None:
        keep = np.isin(keys, region_keys(region, c.grid))
        keys, n_plus, n_minus = keys[keep], n_plus[keep], n_minus[keep]
    m = keys.shape[0]
    if m > max_cells:
        raise CapacityError(f"{m} occupied cells exceed the exhaustive-search cap {max_cells}")
    own = c.label_of_keys(keys)
    own_errors = int(np.where(own > 0, n_minus, n_plus).sum())
    if m == 0:
        return own_errors == 0
    # bit j of row b set <=> cell j labelled +1
    bits = (np.arange(2**m, dtype=np.int64)[:, None] >> np.arange(m)) & 1
    errors = bits @ n_minus + (1 - bits) @ n_plus
    return own_errors == int(errors.min())


# -- TV-HR --------------------------------------------------------------------

def make_s_grid(n: int, d: int) -> np.ndarray:
    """Uniform ``n^(-1/d)``-net of (0, 1]: ``{j n^(-1/d)}`` for ``j = 1..ceil(n^(1/d))``."""
    if n < 4:
        raise PreconditionError("the training/validation split needs n >= 4")
    if d < 1:
        raise PreconditionError("d must be positive")
    root = n ** (1.0 / d)
    r = round(root)
    if r**d == n:
        root = float(r)
        count = r
    else:
        count = math.ceil(root)
    values = np.arange(1, count + 1) / root
    return values[values <= 1.0]


class TVHRResult(NamedTuple):
    classifier: HistogramClassifier
    s: float
    table: np.ndarray  # validation risk per candidate s
    errors: np.ndarray  # validation error counts per candidate s


def split_train_validation(sample: LabeledSample):
    n = len(sample)
    if n < 4:
        raise PreconditionError("the training/validation split needs n >= 4")
    k = n // 2 + 1
    return sample.take(slice(0, k)), sample.take(slice(k, n))


def validation_errors(train: LabeledSample, valid: LabeledSample, s_values,
                      offset: float = 0.0) -> np.ndarray:
    """Validation error counts of ``fit(train, s)`` for each ``s``, one fit at a time."""
    out = np.empty(len(s_values), dtype=np.int64)
    for i, s in enumerate(s_values):
        clf = fit(train, GridSpec(train.d, float(s), offset))
        out[i] = int(np.count_nonzero(clf.predict(valid.points) != valid.labels))
    return out


def validation_errors_1d(train: LabeledSample, valid: LabeledSample, s_values,
                         offset: float = 0.0) -> np.ndarray:
    """Same as :func:`validation_errors` for d = 1, all widths at once.

    Both samples are sorted once; every cell boundary of every candidate grid
    becomes an exact float threshold, so per-cell label sums and validation
    counts are differences of prefix sums at ``searchsorted`` positions.
    """
    s_values = np.asarray(s_values, dtype=float)
    x1 = train.points[:, 0]
    o1 = np.argsort(x1, kind="stable")
    xs1 = x1[o1]
    cum_vote = np.concatenate([[0], np.cumsum(train.labels[o1])])
    x2 = valid.points[:, 0]
    o2 = np.argsort(x2, kind="stable")
    xs2 = x2[o2]
    y2 = valid.labels[o2]
    cum_plus = np.concatenate([[0], np.cumsum(y2 > 0)])
    cum_minus = np.concatenate([[0], np.cumsum(y2 < 0)])

    kmin = np.floor((-1.0 - offset) / s_values).astype(np.int64)
    kmax = np.floor((1.0 - offset) / s_values).astype(np.int64)
    n_thr = kmax - kmin + 2  # boundaries of cells kmin..kmax
    start = np.concatenate([[0], np.cumsum(n_thr)[:-1]])
    total = int(n_thr.sum())
    seg = np.repeat(np.arange(s_values.size), n_thr)
    k = kmin[seg] + np.arange(total) - start[seg]
    t = axis_thresholds(k.astype(float), s_values[seg], offset)

    i1 = np.searchsorted(xs1, t, side="left")
    i2 = np.searchsorted(xs2, t, side="left")
    d_vote = np.diff(cum_vote[i1])
    d_plus = np.diff(cum_plus[i2])
    d_minus = np.diff(cum_minus[i2])
    err = np.where(d_vote >= 0, d_minus, d_plus)
    err[(start + n_thr - 1)[:-1]] = 0  # differences across two widths
    cs = np.concatenate([[0], np.cumsum(err)])
    return cs[start + n_thr - 1] - cs[start]


def tvhr_fit(sample: LabeledSample, s_values=None, offset: float = 0.0,
             method: str = "auto") -> TVHRResult:
    """Training/validation histogram rule.

    The first ``floor(n/2) + 1`` observations train one histogram per
    candidate width; the rest pick the width with the fewest validation
    errors, ties going to the smallest width.
    """
    train, valid = split_train_validation(sample)
    if s_values is None:
        s_values = make_s_grid(len(sample), sample.d)
    s_values = np.asarray(s_values, dtype=float)
    if s_values.size == 0 or np.any(np.diff(s_values) <= 0):
        raise PreconditionError("candidate widths must be non-empty and strictly increasing")
    if method == "auto":
        method = "sorted" if sample.d == 1 else "direct"
    if method == "sorted":
        if sample.d != 1:
            raise PreconditionError("the sorted-threshold path is one-dimensional")
        errors = validation_errors_1d(train, valid, s_values, offset)
    elif method == "direct":
        errors = validation_errors(train, valid, s_values, offset)
    else:
        raise PreconditionError(f"unknown method {method!r}")
    best = int(np.argmin(errors))  # first minimum = smallest s
    s = float(s_values[best])
    clf = fit(train, GridSpec(sample.d, s, offset))
    return TVHRResult(clf, s, errors / len(valid), errors)


def random_classifier(grid: GridSpec, rng: np.random.Generator) -> HistogramClassifier:
    """Independent fair-coin label on every cell meeting X."""
    cells = cells_meeting_X(grid)
    labels = rng.choice(np.array([-1, 1]), size=len(cells))
    return HistogramClassifier.from_labels(grid, cells, labels)
