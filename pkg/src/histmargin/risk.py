"""Classification loss, empirical risks and exact / Monte Carlo excess risks.

For the synthetic families the Bayes classifier is ``sign(x_1)`` (with
``sign(0) = +1``), so the excess risk of a cellwise classifier is a sum over
cells of ``int |2 eta - 1| dP_X`` over the part of the cell on the wrong side
of ``x_1 = 0``. Those integrals factorize along x_1 and are evaluated in
closed form; the far_noise bump is handled by quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import EmptySampleError, PreconditionError
from .grid import GridSpec, cell_indices, keys_to_indices, linear_keys
from .hist import HistogramClassifier, region_keys, random_classifier
from .margin import NearFarSplit, near_far_partition
from .synth import LabeledSample, SyntheticFamily

ABS_SLACK = 1e-12
MC_CHUNK = 10**6


@dataclass(frozen=True)
class RiskReport:
    risk: float
    excess: float
    method: str  # "exact" or "monte_carlo"
    region: Optional[np.ndarray] = None
    std_error: Optional[float] = None


def classification_loss(y, t):
    """``1{y * sign(t) <= 0}`` with ``sign(0) = +1``."""
    y = np.asarray(y)
    t = np.asarray(t)
    out = (y * np.where(t >= 0, 1, -1) <= 0).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def _in_region(c: HistogramClassifier, points, region) -> np.ndarray:
    keys = linear_keys(cell_indices(points, c.grid), c.grid)
    return np.isin(keys, region_keys(region, c.grid))


def empirical_risk(c: HistogramClassifier, sample: LabeledSample, region=None) -> float:
    """Mean classification loss on ``sample``; points outside ``region`` count 0."""
    if len(sample) == 0:
        raise EmptySampleError("empirical risk of an empty sample")
    wrong = c.predict(sample.points) != sample.labels
    if region is not None:
        wrong &= _in_region(c, sample.points, region)
    return np.count_nonzero(wrong) / len(sample)


# -- exact per-cell integrals -------------------------------------------------

class CellIntegrals(NamedTuple):
    """Per-cell integrals over ``A_j ∩ X``: ``P_X`` mass and ``|2 eta - 1|``
    mass on each side of ``x_1 = 0``."""
    mass_neg: np.ndarray
    mass_pos: np.ndarray
    noise_neg: np.ndarray
    noise_pos: np.ndarray


def cell_integrals(family: SyntheticFamily, grid: GridSpec, cells) -> CellIntegrals:
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, grid.d)
    lower = grid.offset + cells * grid.s
    upper = lower + grid.s
    lo = np.clip(lower, -1.0, 1.0)
    hi = np.clip(upper, -1.0, 1.0)
    other = np.prod((hi[:, 1:] - lo[:, 1:]) / 2.0, axis=1)
    a, b = lo[:, 0], hi[:, 0]
    zero = np.zeros_like(a)
    mass_neg = other * family.mass_x1(np.minimum(a, 0.0), np.minimum(b, 0.0))
    mass_pos = other * family.mass_x1(np.maximum(a, 0.0), np.maximum(b, 0.0))
    neg, pos = family.noise_parts_x1(a, b)
    noise_neg, noise_pos = other * neg, other * pos
    if family.kind == "far_noise":
        noise_pos = noise_pos.copy()
        for i in np.flatnonzero(b > zero):
            noise_pos[i] -= family.bump_integral(lower[i], upper[i])
    return CellIntegrals(mass_neg, mass_pos, noise_neg, noise_pos)


def excess_contributions(c: HistogramClassifier, family: SyntheticFamily, cells) -> np.ndarray:
    """Excess risk of ``c`` inside each of the given cells."""
    ints = cell_integrals(family, c.grid, cells)
    labels = c.label_of_cells(cells)
    return np.where(labels > 0, ints.noise_neg, ints.noise_pos)


def _region_cells(region, grid: GridSpec) -> np.ndarray:
    return keys_to_indices(region_keys(region, grid), grid)


def excess_risk_exact(c: HistogramClassifier, family: SyntheticFamily, region=None) -> RiskReport:
    """Exact excess risk ``int_{(X_1 Δ {f >= 0}) ∩ A} |2 eta - 1| dP_X``.

    Without a region the sum runs over all of X. Only the stored cells are
    visited: the unstored ones share ``default_label``, whose total is known in
    closed form, so the cost is linear in the number of stored cells.
    """
    if family.d != c.grid.d:
        raise PreconditionError("family and classifier dimensions differ")
    if region is not None:
        cells = _region_cells(region, c.grid)
        ints = cell_integrals(family, c.grid, cells)
        labels = c.label_of_cells(cells)
        excess = math.fsum(np.where(labels > 0, ints.noise_neg, ints.noise_pos))
        minimal = math.fsum(ints.mass_neg + ints.mass_pos
                            - ints.noise_neg - ints.noise_pos) / 2.0
        return RiskReport(minimal + excess, max(excess, 0.0), "exact", region=cells)
    stored = c.cells
    ints = cell_integrals(family, c.grid, stored)
    own = np.where(c.labels > 0, ints.noise_neg, ints.noise_pos)
    if c.default_label > 0:
        base, dflt = float(family.abs_noise_tail(1.0)), ints.noise_neg
    else:
        # total |2 eta - 1| mass on the x_1 > 0 side, including the bump dip
        base = float(family.abs_noise_tail(1.0)) - family.bump_total()
        dflt = ints.noise_pos
    excess = math.fsum([base, *own.tolist(), *(-dflt).tolist()])
    excess = max(excess, 0.0)
    return RiskReport(family.bayes_risk() + excess, excess, "exact")


def excess_risk_mc(c: HistogramClassifier, family: SyntheticFamily, m: int, seed,
                   region=None) -> RiskReport:
    """Monte Carlo estimate of ``E[L(y, c(x)) - L(y, f*(x))]`` from ``m`` fresh draws."""
    if m < 100:
        raise PreconditionError("Monte Carlo excess risk needs m >= 100")
    rng = np.random.default_rng(seed)
    sum_d = sum_d2 = sum_loss = 0.0
    done = 0
    while done < m:
        k = min(MC_CHUNK, m - done)
        x = family.sample_x(k, rng)
        eta = (1.0 + family.signed_noise(x)) / 2.0
        y = np.where(rng.random(k) < eta, 1, -1)
        loss = (c.predict(x) != y).astype(float)
        diff = loss - (family.bayes_label(x) != y)
        if region is not None:
            inside = _in_region(c, x, region)
            loss *= inside
            diff *= inside
        sum_d += diff.sum()
        sum_d2 += np.dot(diff, diff)
        sum_loss += loss.sum()
        done += k
    mean = float(sum_d) / m
    var = max(float(sum_d2) / m - mean * mean, 0.0) * m / (m - 1)
    return RiskReport(float(sum_loss) / m, mean, "monte_carlo", std_error=math.sqrt(var / m))


# -- lemma checks -------------------------------------------------------------

class RiskSplit(NamedTuple):
    lhs: float
    rhs_near: float
    rhs_far: float
    holds: bool


def risk_split_check(c: HistogramClassifier, family: SyntheticFamily,
                     split: NearFarSplit) -> RiskSplit:
    """Excess risk on X against the sum of the excess risks on the near and far cells."""
    if split.grid != c.grid:
        raise PreconditionError("split and classifier use different grids")
    if not split.covers():
        raise PreconditionError("near and far cells do not cover X")
    lhs = excess_risk_exact(c, family).excess
    near = excess_risk_exact(c, family, split.near).excess if len(split.near) else 0.0
    far = excess_risk_exact(c, family, split.far).excess if len(split.far) else 0.0
    return RiskSplit(lhs, near, far, lhs <= near + far + ABS_SLACK)


class VarianceCheck(NamedTuple):
    worst_ratio: float
    holds: bool
    bound: float
    degenerate: bool


def variance_terms(c: HistogramClassifier, family: SyntheticFamily, far_cells):
    """``E h^2`` and ``E h`` for ``h = L_F o c - L_F o f*`` on the far cells.

    ``h^2 = 1{c != f*}`` on F, so ``E h^2`` is the ``P_X``-mass of the
    disagreement region inside F; ``E h`` is the excess risk on F.
    """
    ints = cell_integrals(family, c.grid, far_cells)
    labels = c.label_of_cells(far_cells)
    second = math.fsum(np.where(labels > 0, ints.mass_neg, ints.mass_pos))
    first = math.fsum(np.where(labels > 0, ints.noise_neg, ints.noise_pos))
    return second, first


def variance_bound_check(family: SyntheticFamily, grid: GridSpec, r: float, trials: int = 100,
                         seed=0, c_LC: Optional[float] = None) -> VarianceCheck:
    """Largest ``E h^2 / E h`` over random cellwise classifiers against ``c_LC / r^gamma``."""
    if not family.gamma > 0:
        raise PreconditionError("the variance bound needs gamma > 0")
    split = near_far_partition(family, grid, r)
    c = family.margin_profile().c_LC if c_LC is None else c_LC
    bound = c / r**family.gamma
    if len(split.far) == 0:
        warnings.warn("far region is empty; variance bound holds vacuously", stacklevel=2)
        return VarianceCheck(0.0, True, bound, True)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        clf = random_classifier(grid, rng)
        second, first = variance_terms(clf, family, split.far)
        if first > 0:
            worst = max(worst, second / first)
        elif second > 0:
            worst = math.inf
    return VarianceCheck(worst, worst <= bound * (1.0 + 1e-9), bound, False)
