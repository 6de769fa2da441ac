"""Synthetic distributions on [-1, 1]^d x {-1, +1} with analytic posteriors.

Three families share the hyperplane decision boundary ``x_1 = 0`` and the
signed noise ``2 eta(x) - 1 = sign(x_1) |x_1|^gamma``:

``linear``
    P_X uniform on X.
``power_mass``
    x_1 has density ``(alpha / 2) |x_1|^(alpha - 1)``, the other coordinates
    are uniform, so ``P_X(|x_1| < t) = t^alpha``.
``far_noise``
    ``linear`` with a smooth radial dip of ``|2 eta - 1|`` towards zero inside a
    ball far from the boundary. The Bayes classifier is unchanged but the
    distance to the boundary no longer controls the noise from below.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import DatasetFormatError, DomainError, EmptySampleError, PreconditionError

KINDS = ("linear", "power_mass", "far_noise")
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class Bump:
    center: tuple
    radius: float
    depth: float

    def profile(self, dist):
        """``depth * (1 - smoothstep(dist / radius))``, zero outside the ball."""
        u = np.clip(np.asarray(dist, dtype=float) / self.radius, 0.0, 1.0)
        return self.depth * (1.0 - u * u * (3.0 - 2.0 * u))


def default_bump(d: int, gamma: float, center_x1: float = 0.7, radius: float = 0.15,
                 floor: float = 1e-9) -> Bump:
    """Bump centred on the x_1 axis whose centre has ``|2 eta - 1| = floor``."""
    center = (center_x1,) + (0.0,) * (d - 1)
    depth = 1.0 - floor / center_x1**gamma
    return Bump(center=center, radius=radius, depth=depth)


@dataclass(frozen=True)
class MarginProfile:
    alpha: float
    beta: float
    gamma: float
    q: float
    c_ME: float
    c_MNE: float
    c_LC: float
    c_UC: float
    c_NE: Optional[float]
    hausdorff_boundary: float
    delta_star: float = 1.0
    lower_control: bool = True


@dataclass(frozen=True)
class LabeledSample:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        lab = np.asarray(self.labels).reshape(-1)
        if pts.shape[0] == 0:
            raise EmptySampleError("sample has no observations")
        if pts.shape[0] != lab.shape[0]:
            raise PreconditionError("points and labels differ in length")
        if not np.all((lab == 1) | (lab == -1)):
            raise DatasetFormatError("labels must be -1 or +1")
        if np.any(np.abs(pts) > 1.0) or not np.all(np.isfinite(pts)):
            raise DomainError("all points must lie in [-1, 1]^d")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab.astype(np.int64))

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def take(self, rows) -> "LabeledSample":
        return LabeledSample(self.points[rows], self.labels[rows])


@dataclass(frozen=True)
class SyntheticFamily:
    kind: str
    d: int
    gamma: float
    alpha: float = 1.0
    bump: Optional[Bump] = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown family kind {self.kind!r}")
        if int(self.d) != self.d or self.d < 1:
            raise PreconditionError("d must be a positive integer")
        if not self.gamma > 0:
            raise PreconditionError("gamma must be positive")
        if not self.alpha > 0:
            raise PreconditionError("alpha must be positive")
        if self.kind != "power_mass" and self.alpha != 1.0:
            raise PreconditionError("alpha is only configurable for power_mass")
        if self.kind == "far_noise":
            bump = self.bump or default_bump(self.d, self.gamma)
            if len(bump.center) != self.d:
                raise PreconditionError("bump centre has wrong dimension")
            c = np.asarray(bump.center, dtype=float)
            if c[0] - bump.radius <= bump.radius:
                raise PreconditionError("bump must lie inside {x_1 > 2 radius}")
            if np.any(np.abs(c) + bump.radius > 1.0):
                raise PreconditionError("bump must lie inside X")
            if not 0.0 <= bump.depth <= 1.0:
                raise PreconditionError("bump depth must lie in [0, 1]")
            object.__setattr__(self, "bump", bump)
        elif self.bump is not None:
            raise PreconditionError("only far_noise takes a bump")
        object.__setattr__(self, "d", int(self.d))

    @classmethod
    def linear(cls, d: int = 1, gamma: float = 1.0) -> "SyntheticFamily":
        return cls("linear", d, gamma)

    @classmethod
    def power_mass(cls, d: int = 1, alpha: float = 2.0, gamma: float = 1.0) -> "SyntheticFamily":
        return cls("power_mass", d, gamma, alpha)

    @classmethod
    def far_noise(cls, d: int = 1, gamma: float = 1.0, bump: Optional[Bump] = None) -> "SyntheticFamily":
        return cls("far_noise", d, gamma, 1.0, bump)

    # -- pointwise quantities -------------------------------------------------

    def _points(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if (self.d == 1 and pts.shape[0] != 1) else pts[None, :]
        if pts.shape[1] != self.d:
            raise DomainError(f"expected {self.d} coordinates, got {pts.shape[1]}")
        if np.any(np.abs(pts) > 1.0):
            raise DomainError("point outside X = [-1, 1]^d")
        return pts

    @staticmethod
    def _unwrap(x, values):
        return values[0] if np.ndim(x) <= 1 and values.shape[0] == 1 else values

    def _noise(self, pts: np.ndarray) -> np.ndarray:
        x1 = pts[:, 0]
        v = x1.copy() if self.gamma == 1.0 else np.sign(x1) * np.abs(x1) ** self.gamma
        if self.kind == "far_noise":
            dist = np.linalg.norm(pts - np.asarray(self.bump.center), axis=1)
            v = v * (1.0 - self.bump.profile(dist))
        return v

    def signed_noise(self, x):
        """``2 eta(x) - 1``, evaluated directly rather than through ``eta``."""
        pts = self._points(x)
        return self._unwrap(x, self._noise(pts))

    def eta(self, x):
        pts = self._points(x)
        return self._unwrap(x, (1.0 + self._noise(pts)) / 2.0)

    def delta_eta(self, x):
        """Sup-norm distance to the opposite class region; zero where eta = 1/2.

        The sign of ``2 eta - 1`` equals ``sign(x_1)`` off the tie set in every
        family, so the distance from ``x`` to the other half of X is ``|x_1|``.
        """
        pts = self._points(x)
        dist = np.abs(pts[:, 0])
        dist = np.where(self._noise(pts) == 0.0, 0.0, dist)
        return self._unwrap(x, dist)

    def bayes_label(self, x):
        pts = self._points(x)
        return self._unwrap(x, np.where(self._noise(pts) >= 0.0, 1, -1))

    # -- sampling -------------------------------------------------------------

    def sample_x(self, m: int, rng: np.random.Generator) -> np.ndarray:
        pts = rng.uniform(-1.0, 1.0, size=(m, self.d))
        if self.kind == "power_mass":
            u = pts[:, 0]
            pts[:, 0] = np.sign(u) * np.abs(u) ** (1.0 / self.alpha)
        return pts

    def sample(self, n: int, seed) -> LabeledSample:
        if n < 1:
            raise EmptySampleError("n must be at least 1")
        rng = np.random.default_rng(seed)
        pts = self.sample_x(n, rng)
        eta = (1.0 + self._noise(pts)) / 2.0
        labels = np.where(rng.random(n) < eta, 1, -1)
        return LabeledSample(pts, labels)

    # -- exact integrals along x_1 ---------------------------------------------

    def mass_x1(self, a, b):
        """``P(a <= x_1 < b)`` for ``-1 <= a <= b <= 1``."""
        cdf = lambda t: np.sign(t) * np.abs(t) ** self.alpha / 2.0
        return cdf(np.asarray(b, dtype=float)) - cdf(np.asarray(a, dtype=float))

    def abs_noise_tail(self, t):
        """``int_0^t |x|^gamma p_1(x) dx`` for ``0 <= t <= 1`` (no bump)."""
        t = np.asarray(t, dtype=float)
        k = self.alpha + self.gamma
        return self.alpha * t**k / (2.0 * k)

    def noise_parts_x1(self, a, b):
        """Split ``int_a^b |x|^gamma p_1`` into its x_1 < 0 and x_1 > 0 pieces (no bump)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        g = self.abs_noise_tail
        neg = g(np.maximum(-a, 0.0)) - g(np.maximum(-b, 0.0))
        pos = g(np.maximum(b, 0.0)) - g(np.maximum(a, 0.0))
        return neg, pos

    def bump_integral(self, lower, upper) -> float:
        """``int_box (2 eta_linear - 1 - (2 eta - 1)) dP_X`` for the far_noise bump.

        Nested adaptive quadrature restricted to the ball, tolerance ``QUAD_TOL``.
        """
        if self.kind != "far_noise":
            return 0.0
        lower = np.maximum(np.asarray(lower, dtype=float), -1.0)
        upper = np.minimum(np.asarray(upper, dtype=float), 1.0)
        c = np.asarray(self.bump.center, dtype=float)
        rho = self.bump.radius
        lo = np.maximum(lower, c - rho)
        hi = np.minimum(upper, c + rho)
        if np.any(hi <= lo):
            return 0.0
        d, gamma, bump = self.d, self.gamma, self.bump
        density = 0.5**d

        def inner(level, prefix_sq, x1):
            h2 = rho * rho - prefix_sq
            if h2 <= 0.0:
                return 0.0
            h = math.sqrt(h2)
            a = max(lo[level], c[level] - h)
            b = min(hi[level], c[level] + h)
            if b <= a:
                return 0.0
            if level == d - 1:
                def f(t):
                    dist = math.sqrt(prefix_sq + (t - c[level]) ** 2)
                    base = t if level == 0 else x1
                    return abs(base) ** gamma * float(bump.profile(dist))
            else:
                def f(t):
                    sq = prefix_sq + (t - c[level]) ** 2
                    return inner(level + 1, sq, t if level == 0 else x1)
            val, _ = integrate.quad(f, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
            return val

        return density * inner(0, 0.0, None)

    # -- global quantities ----------------------------------------------------

    def bump_total(self) -> float:
        """Noise mass removed by the bump over all of X (0 without a bump)."""
        return _bump_total(self)

    def bayes_risk(self) -> float:
        """``int min(eta, 1 - eta) dP_X = (1 - E|2 eta - 1|) / 2``."""
        mean_abs = self.alpha / (self.alpha + self.gamma) - self.bump_total()
        return (1.0 - mean_abs) / 2.0

    def margin_profile(self) -> MarginProfile:
        a, g = self.alpha, self.gamma
        if self.kind == "far_noise":
            # The constants are those of the bump-free family; lower control
            # fails for every finite c_LC. The NE exponent is the one seen for
            # eps well above the bump floor, where the dip adds mass ~ eps^(d/2).
            return MarginProfile(
                alpha=1.0, beta=1.0 + g, gamma=g, q=min(1.0 / g, self.d / 2.0),
                c_ME=1.0, c_MNE=(1.0 / (1.0 + g)) ** (1.0 / (1.0 + g)),
                c_LC=1.0, c_UC=1.0, c_NE=None,
                hausdorff_boundary=2.0 ** (self.d - 1), delta_star=1.0,
                lower_control=False,
            )
        return MarginProfile(
            alpha=a, beta=a + g, gamma=g, q=a / g,
            c_ME=1.0, c_MNE=(a / (a + g)) ** (1.0 / (a + g)),
            c_LC=1.0, c_UC=1.0, c_NE=1.0,
            hausdorff_boundary=2.0 ** (self.d - 1), delta_star=1.0,
        )

    def delta_range(self, lower, upper):
        """Infimum and supremum of ``delta_eta`` over ``box ∩ X`` for each box row.

        ``lower``/``upper`` are ``(m, d)`` arrays of half-open cell bounds. Rows
        whose box misses X are not expected.
        """
        a = np.maximum(np.asarray(lower, dtype=float)[:, 0], -1.0)
        b = np.minimum(np.asarray(upper, dtype=float)[:, 0], 1.0)
        lo = np.where((a <= 0.0) & (b >= 0.0), 0.0, np.minimum(np.abs(a), np.abs(b)))
        hi = np.maximum(np.abs(a), np.abs(b))
        if self.kind == "far_noise" and self.bump.depth == 1.0:
            c = np.asarray(self.bump.center)
            hit = np.all((np.asarray(lower) <= c) & (c < np.asarray(upper)), axis=1)
            lo = np.where(hit, 0.0, lo)
        return lo, hi


@functools.lru_cache(maxsize=64)
def _bump_total(family: SyntheticFamily) -> float:
    return family.bump_integral(-np.ones(family.d), np.ones(family.d))


def sample(family: SyntheticFamily, n: int, seed) -> LabeledSample:
    return family.sample(n, seed)


def import_dataset(path, d: Optional[int] = None) -> LabeledSample:
    """Read ``x_1,...,x_d,label`` rows; lines starting with ``#`` are skipped."""
    points, labels = [], []
    width = None
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if width is None:
                width = len(row)
                if d is not None and width != d + 1:
                    raise DatasetFormatError(f"expected {d + 1} columns, found {width}", row_no)
                if width < 2:
                    raise DatasetFormatError("need at least one coordinate and a label", row_no)
            elif len(row) != width:
                raise DatasetFormatError(f"expected {width} columns, found {len(row)}", row_no)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise DatasetFormatError(f"unparsable number ({exc})", row_no) from None
            lab = vals[-1]
            if lab not in (-1.0, 1.0):
                raise DatasetFormatError(f"label {row[-1].strip()!r} not in {{-1, +1}}", row_no)
            x = vals[:-1]
            if any(not math.isfinite(v) or abs(v) > 1.0 for v in x):
                raise DatasetFormatError("point outside [-1, 1]^d", row_no)
            points.append(x)
            labels.append(int(lab))
    if not points:
        raise EmptySampleError(f"{path}: no observations")
    return LabeledSample(np.array(points, dtype=float), np.array(labels, dtype=np.int64))


def write_dataset(sample: LabeledSample, path) -> None:
    with open(path, "w", newline="") as fh:
        for x, y in zip(sample.points, sample.labels):
            fh.write(",".join(repr(float(v)) for v in x) + f",{int(y)}\n")
