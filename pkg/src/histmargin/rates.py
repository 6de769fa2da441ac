"""Rate exponents, oracle-inequality constants and the rate-experiment runner.

With ``kappa = (1 + gamma)(alpha + gamma)`` the histogram rule with width
``s_n ~ n^(-kappa / (beta (kappa + gamma^2) + d kappa))`` attains the excess
risk rate ``n^(-beta kappa / (beta (kappa + gamma^2) + d kappa))`` whenever
``beta <= kappa / gamma``. The comparison exponents below are the rates
known for other learners under matching assumptions.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import OutOfRegimeError, PreconditionError
from .grid import GridSpec
from .hist import fit, make_s_grid, tvhr_fit
from .risk import excess_risk_exact
from .synth import SyntheticFamily

MODES = ("fixed_schedule", "tvhr")


@dataclass(frozen=True)
class RateParams:
    alpha: float
    beta: float
    gamma: float
    d: int
    q: Optional[float] = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.gamma >= 0):
            raise PreconditionError("need alpha > 0, beta > 0 and gamma >= 0")
        if int(self.d) != self.d or self.d < 1:
            raise PreconditionError("d must be a positive integer")

    @classmethod
    def from_profile(cls, profile, d: int) -> "RateParams":
        return cls(profile.alpha, profile.beta, profile.gamma, d, profile.q)

    @property
    def kappa(self) -> float:
        return (1.0 + self.gamma) * (self.alpha + self.gamma)

    @property
    def theta(self) -> float:
        return self.alpha / (self.alpha + self.gamma)

    @property
    def applicable(self) -> bool:
        """Whether ``beta <= kappa / gamma`` (always true for gamma = 0)."""
        return self.gamma == 0 or self.beta <= self.kappa / self.gamma


def our_exponent(p: RateParams) -> float:
    if not p.applicable:
        raise OutOfRegimeError(
            f"beta = {p.beta} exceeds kappa/gamma = {p.kappa / p.gamma}; "
            "the width schedule requires beta <= kappa / gamma"
        )
    k, g = p.kappa, p.gamma
    return p.beta * k / (p.beta * (k + g * g) + p.d * k)


def simplified_exponent(alpha: float, gamma: float, d: int) -> float:
    """The exponent for ``beta = alpha + gamma`` written as ``(a+g) / (a+2g+d-g/(1+g))``."""
    if gamma < 0:
        raise PreconditionError("gamma must be nonnegative")
    return (alpha + gamma) / (alpha + 2 * gamma + d - gamma / (1 + gamma))


def balanced_exponent(beta: float, estimation_power: float, d: int) -> float:
    """Rate from balancing ``s^beta`` against ``(s^d n)^(-estimation_power)``.

    The minimiser ``s ~ n^(-e / (beta + d e))`` gives ``n^(-beta e / (beta + d e))``.
    """
    e = estimation_power
    return beta * e / (beta + d * e)


class Exponent(NamedTuple):
    value: float
    log_factor: bool = False


def comparison_exponents(alpha: float, gamma: float, d: int, q: Optional[float] = None) -> dict:
    """Rate exponents of this rule and of competing learners, keyed by name.

    ``ours_no_lc`` is derived by balancing the oracle inequality without the
    lower-control assumption (variance exponent ``q / (q + 1)``); it coincides
    with the minimax rate ``auts_general`` for plug-in rules.
    """
    a, g = alpha, gamma
    out = {
        "ours": Exponent(simplified_exponent(a, g, d)),
        "svm": Exponent((a + g) / (a + 2 * g + d)),
        "kokr_plain": Exponent((a + g) / (a + 3 * g + d)),
        "kokr_dense": Exponent((a + g) / (2 * g + d)),
        "bicodade_general": Exponent((a + g) / (a + 2 * g + d), True),
        "bicodade_uniform": Exponent((1 + g) / (2 * g + d), True),
    }
    if q is None and g > 0:
        q = a / g
    if q is not None:
        if not q > 0:
            raise PreconditionError("q must be positive")
        out["auts_general"] = Exponent(g * (q + 1) / (g * (q + 2) + d))
        theta = q / (q + 1)
        out["ours_no_lc"] = Exponent(balanced_exponent(g * (q + 1), 1.0 / (2.0 - theta), d))
    return out


def schedule_exponent(p: RateParams) -> float:
    k, g = p.kappa, p.gamma
    return k / (p.beta * (k + g * g) + p.d * k)


def s_schedule(n: int, p: RateParams, scale: float = 1.0) -> float:
    """``scale * n^(-kappa / (beta (kappa + gamma^2) + d kappa))`` clamped to (0, 1]."""
    if not scale > 0:
        raise PreconditionError("scale must be positive")
    return min(1.0, scale * float(n) ** (-schedule_exponent(p)))


# -- constants of the oracle inequality ---------------------------------------

@dataclass(frozen=True)
class TheoreticalConstants:
    c_tilde: float
    c_hat: float
    c_main: float
    V: float
    c2: float


def theoretical_constants(alpha: float, gamma: float, d: int, hausdorff_boundary: float,
                          c_LC: float, c_ME: float) -> TheoreticalConstants:
    if gamma == 0:
        raise PreconditionError("the constants divide by gamma; need gamma > 0")
    if min(alpha, gamma, hausdorff_boundary, c_LC, c_ME) <= 0:
        raise PreconditionError("all inputs must be positive")
    a, g = alpha, gamma
    c2 = (a + g) / g * c_ME ** (a * g / (a + g)) * (g * c_LC / a) ** (a / (a + g))
    V = max(1.0, c2)
    c_hat = 32.0 * max(12.0 * hausdorff_boundary, 1.0) * V
    c1 = max(c_LC, 2.0**g)
    num = 16.0 * g * (a + 2 * g) * 8.0 ** (d + 1) * c1 / (a + g)
    c_tilde = (num / c_hat ** ((a + g) / (a + 2 * g))) ** ((a + g) / (a + g + g * (a + 2 * g)))
    c_main = 128.0 * 8.0 ** (d + 1) * c1 * max(g * (a + 2 * g) / (a + g), 1.0) * c_tilde ** (-g)
    return TheoreticalConstants(c_tilde, c_hat, c_main, V, c2)


def schedule_constant(p: RateParams, constants: TheoreticalConstants, tau: float,
                      c_MNE: float) -> float:
    """The width prefactor that balances both terms of the oracle inequality."""
    k, g, b = p.kappa, p.gamma, p.beta
    inner = p.d * k * constants.c_main * tau ** (k / (k + g * g)) / (6.0 * b * c_MNE**b * (k + g * g))
    return inner ** ((k + g * g) / (b * (k + g * g) + p.d * k))


class OracleBound(NamedTuple):
    value: float
    in_force: bool
    s_upper: float  # largest admissible s
    sdn_lower: float  # smallest admissible s^d n


def oracle_bound(s: float, n: int, tau: float, beta: float, c_MNE: float,
                 constants: TheoreticalConstants, p: RateParams,
                 delta_star: float = 1.0) -> OracleBound:
    """Right-hand side ``6 (c_MNE s)^beta + c (tau / (s^d n))^(kappa / (kappa + gamma^2))``
    together with whether both width conditions of the inequality hold."""
    k, g, d = p.kappa, p.gamma, p.d
    kg = k + g * g
    ct = constants.c_tilde
    s_upper = ct ** (kg / (kg + d * g)) * (tau / n) ** (g / (kg + d * g))
    sdn_lower = tau * (ct / min(delta_star / 3.0, 1.0)) ** (kg / g)
    with np.errstate(divide="ignore", over="ignore"):
        est = constants.c_main * (tau / (s**d * n)) ** (k / kg) if s > 0 else math.inf
    value = 6.0 * (c_MNE * s) ** beta + est
    in_force = s <= s_upper and s**d * n >= sdn_lower
    return OracleBound(float(value), bool(in_force), float(s_upper), float(sdn_lower))


# -- experiments --------------------------------------------------------------

class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def fit_loglog(xs, ys) -> LogLogFit:
    """Ordinary least squares of ``log y`` on ``log x``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise PreconditionError("need at least two (x, y) pairs")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise PreconditionError("log-log fit needs positive values")
    lx, ly = np.log(xs), np.log(ys)
    if np.ptp(lx) == 0:
        raise PreconditionError("x values must not all coincide")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return LogLogFit(float(slope), float(intercept), float(r2))


class RateRow(NamedTuple):
    n: int
    mean_excess: float
    std_excess: float
    reps: int


@dataclass
class RateExperimentResult:
    rows: list
    slope: float
    intercept: float
    r_squared: float
    theoretical_exponent: float
    mode: str
    params: dict
    excess: np.ndarray = field(repr=False)  # (len(ns), reps)
    widths: np.ndarray = field(repr=False)  # chosen s per run

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "theoretical_exponent": self.theoretical_exponent,
            "mode": self.mode,
            "params": self.params,
        }


def _one_run(task):
    family, n, mode, s_fixed, seed_words, random_offset = task
    ss = np.random.SeedSequence(seed_words)
    data_seed, offset_seed = ss.spawn(2)
    offset = float(np.random.default_rng(offset_seed).random()) if random_offset else 0.0
    sample = family.sample(n, data_seed)
    if mode == "fixed_schedule":
        clf = fit(sample, GridSpec(family.d, s_fixed, offset))
        s = s_fixed
    else:
        res = tvhr_fit(sample, make_s_grid(n, family.d), offset=offset)
        clf, s = res.classifier, res.s
    return excess_risk_exact(clf, family).excess, s


def run_rate_experiment(family: SyntheticFamily, p: RateParams, ns: Sequence[int], reps: int,
                        mode: str = "fixed_schedule", scale: float = 1.0, seed: int = 0,
                        offset: Union[str, float] = 0.0, workers: int = 1) -> RateExperimentResult:
    """Mean exact excess risk of the histogram rule over ``reps`` fresh samples per ``n``.

    Run ``(i, r)`` (``i`` indexing ``ns``) draws from the stream
    ``SeedSequence([seed, i, r])``, so results do not depend on ``workers``.
    ``offset="random"`` shifts the cell grid by an independent uniform amount
    per run; a float fixes the anchor.
    """
    if mode not in MODES:
        raise PreconditionError(f"mode must be one of {MODES}")
    ns = [int(n) for n in ns]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise PreconditionError("ns must be non-empty and strictly increasing")
    if reps < 1:
        raise PreconditionError("reps must be at least 1")
    if family.d != p.d:
        raise PreconditionError("family and parameter dimensions differ")
    if mode == "tvhr" and ns[0] < 4:
        raise PreconditionError("TV-HR needs n >= 4")
    theo = our_exponent(p)
    random_offset = offset == "random"
    if not random_offset and float(offset) != 0.0:
        raise PreconditionError("offset must be 0.0 or 'random'")

    tasks = []
    for i, n in enumerate(ns):
        s_fixed = s_schedule(n, p, scale)
        for r in range(reps):
            tasks.append((family, n, mode, s_fixed, [int(seed), i, r], random_offset))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one_run, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        out = [_one_run(t) for t in tasks]
    excess = np.array([o[0] for o in out]).reshape(len(ns), reps)
    widths = np.array([o[1] for o in out]).reshape(len(ns), reps)

    means = excess.mean(axis=1)
    stds = excess.std(axis=1, ddof=1) if reps > 1 else np.zeros(len(ns))
    rows = [RateRow(n, float(m), float(sd), reps) for n, m, sd in zip(ns, means, stds)]
    keep = means > 0
    if not keep.all():
        warnings.warn(f"dropping {np.count_nonzero(~keep)} rows with zero mean excess from the fit",
                      stacklevel=2)
    fit_ = fit_loglog(np.array(ns)[keep], means[keep])
    params = {
        "family": family.kind, "alpha": p.alpha, "beta": p.beta, "gamma": p.gamma,
        "d": p.d, "q": p.q, "kappa": p.kappa, "theta": p.theta,
        "ns": ns, "reps": reps, "scale": scale, "seed": seed, "offset": offset,
    }
    return RateExperimentResult(rows, fit_.slope, fit_.intercept, fit_.r_squared, theo, mode,
                                params, excess, widths)


def write_rows_csv(result: RateExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "mean_excess", "std_excess", "reps"])
        for row in result.rows:
            w.writerow([row.n, f"{row.mean_excess:.10g}", f"{row.std_excess:.10g}", row.reps])


def write_summary_json(result: RateExperimentResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
