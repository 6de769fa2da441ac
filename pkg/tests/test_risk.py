import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from histmargin.errors import EmptySampleError, PreconditionError
from histmargin.grid import GridSpec, cells_meeting_X
from histmargin.hist import HistogramClassifier, fit, infinite_sample_fit, random_classifier
from histmargin.margin import NearFarSplit, near_far_partition
from histmargin.risk import (
    classification_loss,
    empirical_risk,
    excess_contributions,
    excess_risk_exact,
    excess_risk_mc,
    risk_split_check,
    variance_bound_check,
    variance_terms,
)
from histmargin.synth import LabeledSample, SyntheticFamily

LIN1 = SyntheticFamily.linear(1, 1.0)


def quad_excess_1d(c, fam, lo=-1.0, hi=1.0):
    """Integrate |2 eta - 1| p_1 over {c != f*} by adaptive quadrature, cell by cell."""
    g = c.grid
    ks = range(math.floor((lo - g.offset) / g.s), math.floor((hi - g.offset) / g.s) + 1)
    dens = lambda x: fam.alpha / 2 * abs(x) ** (fam.alpha - 1)
    total = 0.0
    for k in ks:
        a, b = max(lo, g.offset + k * g.s), min(hi, g.offset + (k + 1) * g.s)
        if b <= a:
            continue
        lab = int(c.label_of_cells([[k]])[0])
        pieces = [(a, min(b, 0.0))] if lab > 0 else [(max(a, 0.0), b)]
        for u, v in pieces:
            if v > u:
                val, _ = integrate.quad(lambda x: abs(fam.signed_noise([x])) * dens(x), u, v,
                                        points=[p for p in (0.55, 0.7, 0.85) if u < p < v] or None,
                                        epsabs=1e-13, limit=200)
                total += val
    return total


class TestLoss:
    def test_examples(self):
        assert classification_loss(1, 0.7) == 0
        assert classification_loss(-1, 0.7) == 1
        assert classification_loss(1, 0.0) == 0
        assert classification_loss(-1, 0.0) == 1

    def test_vectorised(self):
        assert classification_loss(np.array([1, -1]), np.array([-2.0, -2.0])).tolist() == [1, 0]


class TestEmpiricalRisk:
    def test_bayes_noiseless(self):
        x = np.linspace(-0.95, 0.95, 40)[:, None]
        s = LabeledSample(x, np.where(x[:, 0] >= 0, 1, -1))
        c = infinite_sample_fit(LIN1, GridSpec(1, 0.25))
        assert empirical_risk(c, s) == 0

    def test_half(self):
        s = LabeledSample(np.array([[0.5], [0.5]]), np.array([1, -1]))
        c = HistogramClassifier.from_labels(GridSpec(1, 1.0), [[0]], [1])
        assert empirical_risk(c, s) == 0.5
        assert empirical_risk(c, s, region=[(-1,)]) == 0

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            LabeledSample(np.zeros((0, 1)), np.zeros(0))

    def test_converges_to_exact_risk(self):
        c = random_classifier(GridSpec(1, 0.25), np.random.default_rng(3))
        exact = excess_risk_exact(c, LIN1).risk
        errs = [abs(empirical_risk(c, LIN1.sample(m, 5)) - exact) for m in (10**4, 10**6)]
        assert errs[1] < 4 * math.sqrt(0.25 / 1e6)
        assert errs[1] < errs[0]


class TestExcessExact:
    def test_infinite_sample_unit_cells(self):
        c = infinite_sample_fit(LIN1, GridSpec(1, 1.0))
        assert excess_risk_exact(c, LIN1).excess == 0.0

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_constant_minus(self, d):
        fam = SyntheticFamily.linear(d, 1.0)
        c = HistogramClassifier.constant(GridSpec(d, 0.5), -1)
        assert excess_risk_exact(c, fam).excess == pytest.approx(0.25, abs=1e-15)

    def test_constant_minus_by_default_label(self):
        c = HistogramClassifier(GridSpec(2, 0.5), [], [], default_label=-1)
        assert excess_risk_exact(c, SyntheticFamily.linear(2)).excess == pytest.approx(0.25)

    def test_bayes_itself(self):
        fam = SyntheticFamily.power_mass(2, 2.0, 1.0)
        c = infinite_sample_fit(fam, GridSpec(2, 0.25))
        assert excess_risk_exact(c, fam).excess == 0.0

    def test_tie_label_on_straddling_cell(self):
        g = GridSpec(1, 0.5, offset=0.25)
        c = infinite_sample_fit(LIN1, g)  # [-0.25, 0.25) has vote 0 -> +1
        # only the x_1 < 0 half contributes: int_0^0.25 x / 2 dx
        assert excess_risk_exact(c, LIN1).excess == pytest.approx(0.25**2 / 4)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**20), st.sampled_from([1.0, 0.5, 0.3, 0.125]), st.floats(-0.5, 0.5),
           st.sampled_from(["linear", "power_mass"]))
    def test_against_quadrature(self, seed, s, offset, kind):
        fam = SyntheticFamily.linear(1, 1.7) if kind == "linear" else SyntheticFamily.power_mass(1, 0.6, 1.2)
        c = random_classifier(GridSpec(1, s, offset), np.random.default_rng(seed))
        assert excess_risk_exact(c, fam).excess == pytest.approx(quad_excess_1d(c, fam), abs=1e-11)

    def test_far_noise_against_quadrature(self):
        fam = SyntheticFamily.far_noise(1, 1.0)
        c = HistogramClassifier.constant(GridSpec(1, 0.2, 0.03), -1)
        assert excess_risk_exact(c, fam).excess == pytest.approx(quad_excess_1d(c, fam), abs=1e-10)

    @given(st.integers(0, 2**20))
    def test_nonnegative_and_sum_of_cells(self, seed):
        rng = np.random.default_rng(seed)
        g = GridSpec(2, 0.25, rng.uniform(0, 0.25))
        fam = SyntheticFamily.linear(2, 1.0)
        c = random_classifier(g, rng)
        total = excess_risk_exact(c, fam).excess
        cells = cells_meeting_X(g)
        contrib = excess_contributions(c, fam, cells)
        assert total >= 0 and np.all(contrib >= 0)
        assert total == pytest.approx(math.fsum(contrib), abs=1e-12)
        perm = rng.permutation(len(cells))
        assert math.fsum(excess_contributions(c, fam, cells[perm])) == pytest.approx(total, abs=1e-12)

    def test_sparse_formula_matches_full_enumeration(self):
        fam = SyntheticFamily.power_mass(2, 1.5, 0.5)
        sample = fam.sample(200, 4)
        c = fit(sample, GridSpec(2, 0.1, 0.02))
        full = excess_risk_exact(c, fam, region=cells_meeting_X(c.grid)).excess
        assert excess_risk_exact(c, fam).excess == pytest.approx(full, abs=1e-13)


class TestExcessMC:
    def test_constant_minus(self):
        c = HistogramClassifier.constant(GridSpec(1, 0.5), -1)
        r = excess_risk_mc(c, LIN1, 10**6, 1)
        assert abs(r.excess - 0.25) <= 3 * r.std_error

    def test_bayes_pointwise_zero(self):
        c = infinite_sample_fit(LIN1, GridSpec(1, 0.5))
        r = excess_risk_mc(c, LIN1, 10**5, 2)
        assert r.excess == 0.0 and r.std_error == 0.0

    def test_minimum_size(self):
        with pytest.raises(PreconditionError):
            excess_risk_mc(infinite_sample_fit(LIN1, GridSpec(1, 0.5)), LIN1, 99, 0)

    def test_far_noise_agreement(self):
        fam = SyntheticFamily.far_noise(2, 1.0)
        c = random_classifier(GridSpec(2, 0.25, 0.1), np.random.default_rng(0))
        ex, mc = excess_risk_exact(c, fam), excess_risk_mc(c, fam, 10**6, 3)
        assert abs(ex.excess - mc.excess) <= 3 * mc.std_error
        assert abs(ex.risk - mc.risk) <= 3 * math.sqrt(0.25 / 1e6)


class TestRiskSplit:
    def test_holds_for_random_classifiers(self):
        rng = np.random.default_rng(1)
        g = GridSpec(2, 0.25, 0.1)
        fam = SyntheticFamily.linear(2)
        split = near_far_partition(fam, g, 0.125)
        for _ in range(20):
            assert risk_split_check(random_classifier(g, rng), fam, split).holds

    def test_disjoint_split_is_additive(self):
        g = GridSpec(1, 0.25)
        split = near_far_partition(LIN1, g, 0.125)
        near = split.near_set() - split.far_set()
        disjoint = NearFarSplit(g, split.r, np.array(sorted(near)), split.far)
        c = random_classifier(g, np.random.default_rng(4))
        res = risk_split_check(c, LIN1, disjoint)
        assert res.lhs == pytest.approx(res.rhs_near + res.rhs_far, abs=1e-15)

    def test_overlap_is_strict(self):
        g = GridSpec(1, 0.25)
        split = near_far_partition(LIN1, g, 0.25)
        cell = tuple(split.overlap()[0])  # wrong only here
        labels = infinite_sample_fit(LIN1, g).label_map()
        labels[cell] = -labels[cell]
        c = HistogramClassifier.from_labels(g, list(labels), list(labels.values()))
        res = risk_split_check(c, LIN1, split)
        assert res.holds and res.lhs > 0
        assert res.rhs_near + res.rhs_far == pytest.approx(2 * res.lhs)

    def test_non_cover_rejected(self):
        g = GridSpec(1, 0.5)
        bad = NearFarSplit(g, 0.25, np.array([[0]]), np.array([[1]]))
        with pytest.raises(PreconditionError):
            risk_split_check(infinite_sample_fit(LIN1, g), LIN1, bad)


class TestVarianceBound:
    def test_constant_minus_terms(self):
        g = GridSpec(1, 0.25)
        split = near_far_partition(LIN1, g, 0.25)
        c = HistogramClassifier.constant(g, -1)
        second, first = variance_terms(c, LIN1, split.far)
        # the far cells on x_1 >= 0 cover [0.25, 1]; P_X there is 0.375
        assert second == pytest.approx(0.375)
        assert first == pytest.approx(0.234375)
        assert second / first <= 1 / 0.25

    def test_bayes_terms_vanish(self):
        g = GridSpec(1, 0.25)
        split = near_far_partition(LIN1, g, 0.25)
        assert variance_terms(infinite_sample_fit(LIN1, g), LIN1, split.far) == (0.0, 0.0)

    @pytest.mark.parametrize("gamma", [1.0, 2.0])
    @pytest.mark.parametrize("r", [0.25, 0.5])
    def test_random_classifiers(self, gamma, r):
        res = variance_bound_check(SyntheticFamily.linear(1, gamma), GridSpec(1, 0.25), r, 100, 0)
        assert res.holds and res.worst_ratio <= res.bound

    def test_empty_far_region(self):
        with pytest.warns(UserWarning):
            res = variance_bound_check(LIN1, GridSpec(1, 1.0), 1.5, 5, 0)
        assert res.holds and res.degenerate
