"""Cube partitions of R^d and integer cell addressing.

Cell ``k = (k_1, ..., k_d)`` of a grid with side length ``s`` and anchor
``offset`` is the half-open box ``prod_i [offset + k_i s, offset + (k_i + 1) s)``.
With the default ``offset = 0`` cells sit at integer multiples of ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, PreconditionError

DEFAULT_CELL_CAP = 10**8

CellIndex = tuple  # tuple[int, ...] of length d


@dataclass(frozen=True)
class GridSpec:
    d: int
    s: float
    offset: float = 0.0
    cell_cap: int = DEFAULT_CELL_CAP

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise PreconditionError(f"d must be a positive integer, got {self.d!r}")
        if not (0.0 < self.s <= 1.0):
            raise PreconditionError(f"s must lie in (0, 1], got {self.s!r}")
        if not math.isfinite(self.offset):
            raise PreconditionError("offset must be finite")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def k_range(self) -> tuple[int, int]:
        """Inclusive range of per-axis indices whose cells meet [-1, 1]."""
        return (
            math.floor((-1.0 - self.offset) / self.s),
            math.floor((1.0 - self.offset) / self.s),
        )

    @property
    def cells_per_axis(self) -> int:
        lo, hi = self.k_range
        return hi - lo + 1

    @property
    def n_cells_X(self) -> int:
        return self.cells_per_axis**self.d


class CellBox(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray


def _as_points(x, d: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        if d == 1 and pts.shape[0] != 1:
            pts = pts[:, None]
        else:
            pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != d:
        raise DimensionError(f"expected points with {d} coordinates, got shape {np.shape(x)}")
    return pts


def cell_indices(points, grid: GridSpec) -> np.ndarray:
    """Vectorised ``cell_of``: integer array of shape (m, d)."""
    pts = _as_points(points, grid.d)
    return np.floor((pts - grid.offset) / grid.s).astype(np.int64)


def cell_of(x, grid: GridSpec) -> CellIndex:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != grid.d:
        raise DimensionError(f"point has {x.shape[0]} coordinates, grid has d={grid.d}")
    return tuple(int(k) for k in np.floor((x - grid.offset) / grid.s))


def cell_bounds(idx: Sequence[int], grid: GridSpec) -> CellBox:
    k = np.asarray(idx, dtype=np.int64).reshape(-1)
    if k.shape[0] != grid.d:
        raise DimensionError(f"index has {k.shape[0]} coordinates, grid has d={grid.d}")
    lower = grid.offset + k * grid.s
    return CellBox(lower, lower + grid.s)


def cells_meeting_X(grid: GridSpec) -> np.ndarray:
    """All cell indices whose box intersects X = [-1, 1]^d, in lexicographic order.

    Returns an ``(|J|, d)`` integer array.
    """
    count = grid.n_cells_X
    if count > grid.cell_cap:
        raise CapacityError(f"{count} cells meet X, cap is {grid.cell_cap}")
    lo, hi = grid.k_range
    axis = np.arange(lo, hi + 1, dtype=np.int64)
    mesh = np.meshgrid(*([axis] * grid.d), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def linear_keys(idx, grid: GridSpec) -> np.ndarray:
    """Map cell indices to int64 keys, row-major over the box of cells meeting X.

    Indices outside that box map to -1.
    """
    k = np.asarray(idx, dtype=np.int64)
    if k.ndim == 1:
        k = k.reshape(1, -1) if k.shape[0] == grid.d else k.reshape(-1, 1)
    if k.shape[1] != grid.d:
        raise DimensionError(f"index rows must have {grid.d} entries")
    lo, _ = grid.k_range
    size = grid.cells_per_axis
    if size**grid.d >= 2**62:
        raise CapacityError("cell box too large for 64-bit keys")
    rel = k - lo
    inside = np.all((rel >= 0) & (rel < size), axis=1)
    keys = np.zeros(k.shape[0], dtype=np.int64)
    for i in range(grid.d):
        keys = keys * size + rel[:, i]
    keys[~inside] = -1
    return keys


def keys_to_indices(keys, grid: GridSpec) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    size = grid.cells_per_axis
    lo, _ = grid.k_range
    out = np.empty((keys.shape[0], grid.d), dtype=np.int64)
    rem = keys.copy()
    for i in range(grid.d - 1, -1, -1):
        out[:, i] = rem % size + lo
        rem //= size
    return out


def axis_thresholds(k, s: float, offset: float = 0.0) -> np.ndarray:
    """Smallest float ``t`` with ``floor((t - offset) / s) >= k``, elementwise.

    Since ``floor((x - offset) / s)`` is monotone in ``x``, a point lies in a
    cell with axis index below ``k`` iff ``x < t``. This lets sorted-array
    searches reproduce ``cell_indices`` bit for bit.
    """
    k = np.asarray(k, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), k.shape)
    t = offset + k * s
    for _ in range(8):
        low = np.floor((t - offset) / s) < k
        if not low.any():
            break
        t = np.where(low, np.nextafter(t, np.inf), t)
    for _ in range(8):
        prev = np.nextafter(t, -np.inf)
        down = np.floor((prev - offset) / s) >= k
        if not down.any():
            break
        t = np.where(down, prev, t)
    return t
