"""Decision-boundary geometry and margin-condition estimators.

The near/far decomposition sorts the cells meeting X by the range of the
distance to the decision boundary ``Delta_eta`` over each cell: cells where
``Delta_eta <= 3r`` throughout are *near*, cells where ``Delta_eta >= r``
throughout are *far*. The two sets overlap and, for ``r >= s/2``, cover X.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import EstimationError, PreconditionError
from .grid import GridSpec, cells_meeting_X, linear_keys
from .synth import SyntheticFamily

DEFAULT_T_GRID = (0.5, 0.25, 0.1, 0.05, 0.02)
RATIO_SLACK = 1e-9


@dataclass(frozen=True)
class NearFarSplit:
    grid: GridSpec
    r: float
    near: np.ndarray  # (m, d) cell indices
    far: np.ndarray

    def near_set(self) -> set:
        return {tuple(int(k) for k in c) for c in self.near}

    def far_set(self) -> set:
        return {tuple(int(k) for k in c) for c in self.far}

    def covers(self) -> bool:
        """Whether every cell meeting X is near or far."""
        every = linear_keys(cells_meeting_X(self.grid), self.grid)
        union = np.union1d(linear_keys(self.near, self.grid), linear_keys(self.far, self.grid))
        return bool(np.all(np.isin(every, union)))

    def overlap(self) -> np.ndarray:
        keys_far = linear_keys(self.far, self.grid)
        return self.near[np.isin(linear_keys(self.near, self.grid), keys_far)]


def cell_delta_ranges(family: SyntheticFamily, grid: GridSpec, cells=None):
    """Cells meeting X with the infimum and supremum of ``Delta_eta`` over each."""
    if cells is None:
        cells = cells_meeting_X(grid)
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, grid.d)
    lower = grid.offset + cells * grid.s
    lo, hi = family.delta_range(lower, lower + grid.s)
    return cells, lo, hi


def near_far_partition(family: SyntheticFamily, grid: GridSpec, r: float,
                       require_cover: bool = True) -> NearFarSplit:
    """Split the cells meeting X into near (``sup Delta <= 3r``) and far
    (``inf Delta >= r``); a cell may be in both.

    ``require_cover=False`` skips the ``r >= s/2`` precondition, for
    exploring what happens below it.
    """
    if family.d != grid.d:
        raise PreconditionError("family and grid dimensions differ")
    if not r > 0:
        raise PreconditionError("r must be positive")
    if require_cover and r < grid.s / 2.0:
        raise PreconditionError(f"need r >= s/2 = {grid.s / 2.0}, got r = {r}")
    cells, lo, hi = cell_delta_ranges(family, grid)
    return NearFarSplit(grid, float(r), cells[hi <= 3.0 * r], cells[lo >= r])


def straddles(grid: GridSpec, cells) -> np.ndarray:
    """Whether each cell meets both sides ``x_1 < 0`` and ``x_1 > 0`` inside X."""
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, grid.d)
    a = np.maximum(grid.offset + cells[:, 0] * grid.s, -1.0)
    b = np.minimum(grid.offset + (cells[:, 0] + 1) * grid.s, 1.0)
    return (a < 0.0) & (b > 0.0)


def check_far_purity(split: NearFarSplit, family: Optional[SyntheticFamily] = None,
                     grid: Optional[GridSpec] = None) -> bool:
    """True iff no far cell meets both class regions.

    All implemented families share the class regions ``{x_1 > 0}`` and
    ``{x_1 < 0}``, so a far cell is impure iff its x_1-range straddles 0.
    """
    grid = grid or split.grid
    if len(split.far) == 0:
        return True
    return not bool(np.any(straddles(grid, split.far)))


def tube_volume(family: SyntheticFamily, delta: float) -> float:
    """Lebesgue volume of ``{x in X : Delta_eta(x) <= delta}``.

    The tube is the slab ``|x_1| <= delta`` (plus, for a far_noise bump of
    full depth, a single null point).
    """
    if delta < 0:
        raise PreconditionError("delta must be nonnegative")
    if delta == 0:
        return 0.0
    return min(2.0 * delta, 2.0) * 2.0 ** (family.d - 1)


def tube_bound(family: SyntheticFamily, delta: float) -> float:
    """``4 H^{d-1}(X_0) delta``."""
    return 4.0 * family.margin_profile().hausdorff_boundary * delta


# -- Monte Carlo estimators ---------------------------------------------------

class ExponentEstimate(NamedTuple):
    exponent: float
    constant: float
    r_squared: float
    t_used: np.ndarray
    values: np.ndarray


def _fit_power_law(ts, values) -> ExponentEstimate:
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = values > 0
    if np.count_nonzero(ok) < 2 or np.unique(ts[ok]).size < 2:
        raise EstimationError("fewer than two usable grid points for the log-log fit")
    lx, ly = np.log(ts[ok]), np.log(values[ok])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    constant = float(np.exp(intercept / slope)) if slope != 0 else float("nan")
    return ExponentEstimate(float(slope), constant, float(r2), ts[ok], values[ok])


def _grid(t_grid) -> np.ndarray:
    t = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float).reshape(-1)
    if t.size == 0 or np.any((t <= 0) | (t > 1)):
        raise PreconditionError("grid values must lie in (0, 1]")
    return t


def _draw(family: SyntheticFamily, sample_size: int, seed):
    if sample_size < 1:
        raise PreconditionError("sample_size must be positive")
    x = family.sample_x(sample_size, np.random.default_rng(seed))
    return family.delta_eta(x), np.abs(family.signed_noise(x))


def estimate_me(family: SyntheticFamily, sample_size: int = 10**6, t_grid=None,
                seed=0) -> ExponentEstimate:
    """Fit ``P_X(Delta_eta < t) ~ (c t)^alpha`` over ``t_grid``."""
    t = _grid(t_grid)
    delta, _ = _draw(family, sample_size, seed)
    delta = np.sort(delta)
    probs = np.searchsorted(delta, t, side="left") / delta.size
    return _fit_power_law(t, probs)


def estimate_mne(family: SyntheticFamily, sample_size: int = 10**6, t_grid=None,
                 seed=0) -> ExponentEstimate:
    """Fit ``E[|2 eta - 1| 1{Delta_eta < t}] ~ (c t)^beta`` over ``t_grid``."""
    t = _grid(t_grid)
    delta, noise = _draw(family, sample_size, seed)
    vals = np.array([np.sum(noise[delta < ti]) for ti in t]) / delta.size
    return _fit_power_law(t, vals)


def estimate_ne(family: SyntheticFamily, sample_size: int = 10**6, eps_grid=None,
                seed=0) -> ExponentEstimate:
    """Fit ``P_X(|2 eta - 1| < eps) ~ (c eps)^q`` over ``eps_grid``."""
    eps = _grid(eps_grid)
    _, noise = _draw(family, sample_size, seed)
    noise = np.sort(noise)
    probs = np.searchsorted(noise, eps, side="left") / noise.size
    return _fit_power_law(eps, probs)


class ControlCheck(NamedTuple):
    holds: bool
    worst_ratio: float
    constant: float


def check_lower_control(family: SyntheticFamily, sample_size: int = 10**6, seed=0,
                        c_LC: Optional[float] = None) -> ControlCheck:
    """Largest sampled ``Delta_eta^gamma / |2 eta - 1|`` against ``c_LC``."""
    if not family.gamma > 0:
        raise PreconditionError("lower control needs gamma > 0")
    c = family.margin_profile().c_LC if c_LC is None else c_LC
    delta, noise = _draw(family, sample_size, seed)
    use = noise > 0
    if not use.any():
        return ControlCheck(True, 0.0, c)
    worst = float(np.max(delta[use] ** family.gamma / noise[use]))
    return ControlCheck(worst <= c * (1.0 + RATIO_SLACK), worst, c)


def check_upper_control(family: SyntheticFamily, sample_size: int = 10**6, seed=0,
                        c_UC: Optional[float] = None) -> ControlCheck:
    """Largest sampled ``|2 eta - 1| / Delta_eta^gamma`` against ``c_UC``."""
    c = family.margin_profile().c_UC if c_UC is None else c_UC
    delta, noise = _draw(family, sample_size, seed)
    use = delta > 0
    if not use.any():
        return ControlCheck(True, 0.0, c)
    worst = float(np.max(noise[use] / delta[use] ** family.gamma))
    return ControlCheck(worst <= c * (1.0 + RATIO_SLACK), worst, c)
