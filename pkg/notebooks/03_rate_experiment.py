"""
Learning-rate experiment
========================

A reduced version of the rate experiment (fewer repetitions than the
acceptance run), the comparison table of rate exponents, and the window of
widths where the finite-sample oracle bound is in force.
"""

# %%
import numpy as np

from histmargin import SyntheticFamily
from histmargin.rates import (
    RateParams,
    comparison_exponents,
    oracle_bound,
    run_rate_experiment,
    theoretical_constants,
)

# %%
family = SyntheticFamily.linear(1, 1.0)
p = RateParams.from_profile(family.margin_profile(), 1)
ns = [2**k for k in range(9, 15)]
for mode in ("fixed_schedule", "tvhr"):
    res = run_rate_experiment(family, p, ns, reps=20, mode=mode, seed=0)
    print(f"{mode:<15} slope {res.slope:.3f} (theory {-res.theoretical_exponent:.3f})")
    for row in res.rows:
        print(f"    n={row.n:>6}  mean excess {row.mean_excess:.3e}  sd {row.std_excess:.1e}")

# %% [markdown]
# Exponents of competing learners for alpha = gamma = 1, d = 2.

# %%
for name, e in comparison_exponents(1.0, 1.0, 2, q=1.0).items():
    print(f"{name + ('[log]' if e.log_factor else ''):<22} {e.value:.4f}")

# %% [markdown]
# The bound needs s small enough and s^d n large enough; for d = 1 that leaves
# a narrow window only once n reaches a few million.

# %%
prof = family.margin_profile()
consts = theoretical_constants(prof.alpha, prof.gamma, 1, prof.hausdorff_boundary, prof.c_LC, prof.c_ME)
for n in (10**5, 10**6, 3 * 10**6, 10**7):
    b = oracle_bound(1.0, n, 3.0, prof.beta, prof.c_MNE, consts, p)
    lo, hi = b.sdn_lower / n, b.s_upper
    window = f"[{lo:.4f}, {hi:.4f}]" if lo <= hi else "empty"
    s_mid = np.clip((lo + hi) / 2, 1e-6, 1.0)
    val = oracle_bound(s_mid, n, 3.0, prof.beta, prof.c_MNE, consts, p).value
    print(f"n={n:>9}: admissible s {window}; bound at the midpoint {val:.3f}")
