"""Command-line interface: ``histmargin {fit,predict,verify,rates}``.

Exit status is 0 on success, 1 when a check fails or a computation errors,
and 2 for invalid configuration (bad flags, unreadable inputs, parameters
outside a precondition).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    CapacityError,
    DatasetFormatError,
    EstimationError,
    HistMarginError,
    OutOfRegimeError,
)
from .grid import GridSpec
from .hist import HistogramClassifier, erm_verify, fit, infinite_sample_fit, random_classifier
from .margin import (
    check_far_purity,
    check_lower_control,
    check_upper_control,
    estimate_me,
    estimate_mne,
    estimate_ne,
    near_far_partition,
    tube_bound,
    tube_volume,
)
from .rates import (
    RateParams,
    comparison_exponents,
    our_exponent,
    run_rate_experiment,
    write_rows_csv,
    write_summary_json,
)
from .risk import empirical_risk, excess_risk_exact, risk_split_check, variance_bound_check
from .synth import Bump, LabeledSample, SyntheticFamily, import_dataset

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

CHECKS = (
    "lemma-sets", "tube", "variance", "erm", "risk-split", "approx-zero",
    "lower-control", "upper-control", "estimators",
)
COMPARISON_ORDER = (
    "ours", "svm", "kokr_plain", "kokr_dense", "bicodade_general",
    "bicodade_uniform", "auts_general", "ours_no_lc",
)


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    family: str = "linear"
    d: int = 1
    gamma: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    q: Optional[float] = None
    bump: Optional[dict] = None
    mode: str = "fixed_schedule"
    ns: list = field(default_factory=lambda: [2**k for k in range(9, 16)])
    reps: int = 100
    seed: int = 0
    scale: float = 1.0
    offset: object = 0.0
    tau: float = 3.0
    s_override: Optional[float] = None
    threads: Optional[int] = None
    out: Optional[str] = None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**raw)

    def merged(self, args: argparse.Namespace) -> "ExperimentConfig":
        """Config values overridden by any flag given on the command line."""
        updates = {}
        for f in fields(self):
            value = getattr(args, f.name, None)
            if value is not None:
                updates[f.name] = value
        return replace(self, **updates)

    def family_spec(self) -> SyntheticFamily:
        try:
            if self.family == "power_mass":
                return SyntheticFamily.power_mass(self.d, 2.0 if self.alpha is None else self.alpha,
                                                  self.gamma)
            if self.alpha not in (None, 1.0):
                raise ConfigError("alpha is only configurable for power_mass")
            if self.family == "far_noise":
                bump = None
                if self.bump is not None:
                    bump = Bump(tuple(self.bump["center"]), float(self.bump["radius"]),
                                float(self.bump["depth"]))
                return SyntheticFamily.far_noise(self.d, self.gamma, bump)
            if self.family == "linear":
                return SyntheticFamily.linear(self.d, self.gamma)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad bump specification: {exc}") from None
        raise ConfigError(f"unknown family {self.family!r}")

    def rate_params(self, family: Optional[SyntheticFamily] = None) -> RateParams:
        if family is not None:
            prof = family.margin_profile()
            alpha, gamma, q = prof.alpha, prof.gamma, prof.q
            beta = prof.beta if self.beta is None else self.beta
        else:
            alpha = 1.0 if self.alpha is None else self.alpha
            gamma = self.gamma
            beta = alpha + gamma if self.beta is None else self.beta
            q = self.q
        return RateParams(alpha, beta, gamma, self.d, q)


# -- argument parsing ----------------------------------------------------------

def _int_list(text: str) -> list:
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _offset(text: str):
    if text == "random":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("offset must be a number or 'random'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: all available CPUs)")
    common.add_argument("--out", default=None)
    common.add_argument("--config", default=None, help="JSON experiment config; flags override it")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", choices=("linear", "power_mass", "far_noise"), default=None)
    fam.add_argument("--d", type=int, default=None)
    fam.add_argument("--gamma", type=float, default=None)
    fam.add_argument("--alpha", type=float, default=None)

    parser = argparse.ArgumentParser(prog="histmargin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common, fam], help="fit a histogram classifier")
    p.add_argument("--data", default=None, help="dataset file (x_1,...,x_d,label rows)")
    p.add_argument("--n", type=int, default=None, help="sample size when drawing from --family")
    p.add_argument("--s", type=float, dest="s_override", default=None, help="cell side length")
    p.add_argument("--offset", type=float, default=None)

    p = sub.add_parser("predict", parents=[common], help="label a dataset with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("verify", parents=[common, fam], help="run lemma and margin checks")
    p.add_argument("--checks", default=",".join(c for c in CHECKS if c != "estimators"))
    p.add_argument("--s", type=float, dest="s_override", default=None)
    p.add_argument("--samples", type=int, default=200_000,
                   help="Monte Carlo sample size for the sampled checks")
    p.add_argument("--trials", type=int, default=100)

    p = sub.add_parser("rates", parents=[common, fam], help="rate experiment and exponent table")
    p.add_argument("--mode", choices=("fixed_schedule", "tvhr"), default=None)
    p.add_argument("--ns", type=_int_list, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--offset", type=_offset, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--exponents-only", action="store_true",
                   help="print the exponent table without running an experiment")
    return parser


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return base.merged(args)


# -- subcommands -----------------------------------------------------------------

def _read_points(path, d: int):
    """Rows of ``d`` coordinates, optionally followed by a label column."""
    rows = []
    with open(path) as fh:
        for row_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise DatasetFormatError("unparsable number", row_no) from None
    if not rows:
        raise DatasetFormatError(f"{path}: no rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DatasetFormatError("rows have differing column counts")
    width = widths.pop()
    if width not in (d, d + 1):
        raise ConfigError(f"data has {width} columns; model expects d={d} (plus optional label)")
    arr = np.array(rows)
    if width == d + 1:
        return LabeledSample(arr[:, :d], arr[:, d]), True
    return arr, False


def cmd_fit(args, cfg: ExperimentConfig) -> int:
    if cfg.s_override is None:
        raise ConfigError("fit needs --s")
    if args.data:
        sample = import_dataset(args.data, cfg.d if args.d is not None else None)
        d = sample.d
    else:
        if args.n is None:
            raise ConfigError("fit needs --data or --n with a family")
        family = cfg.family_spec()
        sample = family.sample(args.n, cfg.seed)
        d = family.d
    offset = args.offset if args.offset is not None else 0.0
    clf = fit(sample, GridSpec(d, cfg.s_override, offset))
    text = clf.to_text()
    info = sys.stdout
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
        info = sys.stderr
    print(f"occupied_cells {len(clf)}", file=info)
    print(f"training_risk {empirical_risk(clf, sample):.10g}", file=info)
    return EXIT_OK


def cmd_predict(args, cfg: ExperimentConfig) -> int:
    try:
        clf = HistogramClassifier.load(args.model)
    except OSError as exc:
        raise ConfigError(f"cannot read model: {exc.strerror}") from None
    data, labelled = _read_points(args.data, clf.grid.d)
    points = data.points if labelled else data
    pred = clf.predict(points)
    out = "\n".join(str(int(v)) for v in pred) + "\n"
    info = sys.stdout
    if cfg.out:
        Path(cfg.out).write_text(out)
    else:
        sys.stdout.write(out)
        info = sys.stderr
    print(f"rows {len(pred)}", file=info)
    if labelled:
        print(f"empirical_risk {empirical_risk(clf, data):.10g}", file=info)
    return EXIT_OK


def _verify_grid(cfg, family):
    s = 0.25 if cfg.s_override is None else cfg.s_override
    # an anchor of s/2 puts a cell symmetrically across the boundary
    return GridSpec(family.d, s, offset=s / 2.0)


def _run_check(name, family, cfg, args):
    """Return (passed, message) for one named check."""
    rng = np.random.default_rng(cfg.seed)
    grid = _verify_grid(cfg, family)
    if name == "lemma-sets":
        bad = 0
        for r in grid.s * np.array([0.5, 0.75, 1.0, 2.0]):
            split = near_far_partition(family, grid, r)
            bad += (not split.covers()) + (not check_far_purity(split, family, grid))
        return bad == 0, f"cover/purity failures {bad} over 4 radii at s={grid.s}"
    if name == "tube":
        worst = max(tube_volume(family, dl) / tube_bound(family, dl)
                    for dl in np.linspace(0.01, family.margin_profile().delta_star, 20))
        return worst <= 1.0, f"max volume/bound ratio {worst:.6g}"
    if name == "variance":
        worst, ok = 0.0, True
        for r in (grid.s / 2.0, grid.s):
            res = variance_bound_check(family, grid, r, args.trials, rng.integers(2**32))
            worst = max(worst, res.worst_ratio / res.bound)
            ok &= res.holds
        return ok, f"max ratio/bound {worst:.6g}"
    if name == "erm":
        fails = 0
        for _ in range(50):
            s = float(rng.choice([1.0, 0.5]))
            g = GridSpec(family.d, s, offset=s / 2.0 * rng.integers(2))
            sample = family.sample(int(rng.integers(1, 31)), rng.integers(2**32))
            clf = fit(sample, g)
            split = near_far_partition(family, g, s)
            fails += sum(not erm_verify(clf, sample, reg) for reg in (None, split.near, split.far))
        return fails == 0, f"ERM failures {fails} over 50 datasets x 3 regions"
    if name == "risk-split":
        fails = 0
        for _ in range(20):
            split = near_far_partition(family, grid, grid.s)
            res = risk_split_check(random_classifier(grid, rng), family, split)
            fails += not res.holds
        return fails == 0, f"split failures {fails} over 20 classifiers"
    if name == "approx-zero":
        clf = infinite_sample_fit(family, grid)
        worst = max(excess_risk_exact(clf, family, near_far_partition(family, grid, r).far).excess
                    for r in (grid.s / 2.0, grid.s, 2 * grid.s))
        return worst == 0.0, f"max far-region excess {worst:.3g}"
    if name == "lower-control":
        res = check_lower_control(family, args.samples, cfg.seed)
        return res.holds, f"worst ratio {res.worst_ratio:.6g} vs c_LC {res.constant:g}"
    if name == "upper-control":
        res = check_upper_control(family, args.samples, cfg.seed)
        return res.holds, f"worst ratio {res.worst_ratio:.6g} vs c_UC {res.constant:g}"
    if name == "estimators":
        prof = family.margin_profile()
        a = estimate_me(family, args.samples, seed=cfg.seed).exponent
        b = estimate_mne(family, args.samples, seed=cfg.seed).exponent
        q = estimate_ne(family, args.samples, seed=cfg.seed).exponent
        ok = abs(a - prof.alpha) <= 0.05 * prof.alpha and abs(b - prof.beta) <= 0.075 * prof.beta \
            and abs(q - prof.q) <= 0.1 * prof.q
        return ok, f"alpha_hat {a:.4f} beta_hat {b:.4f} q_hat {q:.4f}"
    raise AssertionError(name)


def cmd_verify(args, cfg: ExperimentConfig) -> int:
    names = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in names if c not in CHECKS]
    if unknown or not names:
        raise ConfigError(f"unknown checks {unknown}; choose from {', '.join(CHECKS)}")
    family = cfg.family_spec()
    lines, all_ok = [], True
    for name in names:
        try:
            ok, msg = _run_check(name, family, cfg, args)
        except (CapacityError, EstimationError) as exc:
            ok, msg = False, f"error: {exc}"
        all_ok &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {msg}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if cfg.out:
        Path(cfg.out).write_text(text)
    return EXIT_OK if all_ok else EXIT_FAIL


def _exponent_table(p: RateParams) -> str:
    table = comparison_exponents(p.alpha, p.gamma, p.d, p.q)
    ours = our_exponent(p)
    lines = [f"{'method':<22} exponent"]
    lines.append(f"{'ours(beta)':<22} {ours:.4f}")
    for name in COMPARISON_ORDER:
        if name in table:
            e = table[name]
            label = name + ("[log]" if e.log_factor else "")
            lines.append(f"{label:<22} {e.value:.4f}")
    return "\n".join(lines) + "\n"


def _out_paths(out: Optional[str]):
    base = Path(out or "rate_experiment")
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    return base.with_suffix(".csv"), base.with_suffix(".json")


def cmd_rates(args, cfg: ExperimentConfig) -> int:
    if args.exponents_only:
        p = cfg.rate_params()
        sys.stdout.write(_exponent_table(p))
        return EXIT_OK
    family = cfg.family_spec()
    p = cfg.rate_params(family)
    our_exponent(p)  # surface an out-of-regime beta before any work
    workers = cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)
    result = run_rate_experiment(family, p, cfg.ns, cfg.reps, cfg.mode, cfg.scale, cfg.seed,
                                 cfg.offset, workers=max(1, workers))
    csv_path, json_path = _out_paths(cfg.out)
    write_rows_csv(result, csv_path)
    write_summary_json(result, json_path)
    sys.stdout.write(_exponent_table(p))
    print(f"slope {result.slope:.6f} (theory {-result.theoretical_exponent:.6f}), "
          f"r_squared {result.r_squared:.4f}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "verify": cmd_verify, "rates": cmd_rates}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except OutOfRegimeError as exc:
        print(f"error: {exc} (the width schedule requires beta <= kappa/gamma)", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, DatasetFormatError, FileNotFoundError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except HistMarginError as exc:
        # remaining package errors signal violated preconditions of the inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as status 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
