"""
The histogram rule on a synthetic problem
=========================================

Fit a cellwise majority-vote classifier, compare it with its infinite-sample
version, and measure excess risk exactly. Run with ``python3 notebooks/01_histogram_rule_tour.py``.
"""

# %%
import numpy as np

from histmargin import GridSpec, SyntheticFamily, excess_risk_exact, excess_risk_mc, fit
from histmargin.hist import infinite_sample_fit, tvhr_fit

# %% [markdown]
# The linear family: X = [-1, 1]^2 uniform, 2 eta(x) - 1 = x_1, Bayes rule sign(x_1).

# %%
family = SyntheticFamily.linear(d=2, gamma=1.0)
sample = family.sample(2000, seed=0)
print("first points:\n", sample.points[:3], sample.labels[:3])

# %% [markdown]
# A grid anchored at s/2 puts one column of cells across the boundary, so the
# rule pays an approximation error there even with infinite data.

# %%
grid = GridSpec(2, 0.25, offset=0.125)
clf = fit(sample, grid)
ideal = infinite_sample_fit(family, grid)
print(f"occupied cells: {len(clf)}")
print(f"exact excess risk, n = 2000:       {excess_risk_exact(clf, family).excess:.6f}")
print(f"exact excess risk, infinite sample: {excess_risk_exact(ideal, family).excess:.6f}")
mc = excess_risk_mc(clf, family, 10**6, seed=1)
print(f"Monte Carlo check: {mc.excess:.6f} +/- {mc.std_error:.6f}")

# %% [markdown]
# Training/validation selection of the cell width: fit on the first half for
# every width in an n^(-1/d) net, keep the width with the smallest validation risk.

# %%
res = tvhr_fit(family.sample(4000, seed=2), offset=0.0)
print(f"selected s = {res.s:.4f}; validation risks of the first widths: {np.round(res.table[:6], 4)}")
print(f"excess risk of the selected classifier: {excess_risk_exact(res.classifier, family).excess:.6f}")

# %%
print(clf.to_text().splitlines()[:6])
