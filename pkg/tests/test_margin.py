import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from histmargin.errors import EstimationError, PreconditionError
from histmargin.grid import GridSpec, cells_meeting_X
from histmargin.margin import (
    NearFarSplit,
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
from histmargin.synth import SyntheticFamily

LIN1 = SyntheticFamily.linear(1, 1.0)


def sampled_delta_range(fam, grid, cell, m=4000, seed=0):
    """Inner approximation of the Delta range on a cell by dense sampling."""
    rng = np.random.default_rng(seed)
    lo = np.maximum(grid.offset + np.asarray(cell) * grid.s, -1)
    hi = np.minimum(grid.offset + (np.asarray(cell) + 1) * grid.s, 1)
    x = rng.uniform(lo, hi, size=(m, grid.d))
    x = np.vstack([x, lo, np.where(hi >= 1, 1.0, np.nextafter(hi, -np.inf))])
    dl = fam.delta_eta(x)
    return dl.min(), dl.max()


class TestPartition:
    def test_near_cell(self):
        split = near_far_partition(LIN1, GridSpec(1, 0.5), 0.25)
        assert (0,) in split.near_set() and (0,) not in split.far_set()

    def test_far_cell(self):
        split = near_far_partition(LIN1, GridSpec(1, 0.5), 0.25)
        assert (1,) in split.far_set() and (1,) not in split.near_set()

    def test_cover(self):
        assert near_far_partition(LIN1, GridSpec(1, 0.5), 0.25).covers()

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            near_far_partition(LIN1, GridSpec(1, 0.5), 0.2)

    @pytest.mark.parametrize("offset", [0.0, 0.05, 0.125])
    @pytest.mark.parametrize("d", [1, 2])
    def test_definitions_against_sampling(self, d, offset):
        fam = SyntheticFamily.linear(d, 1.0)
        g = GridSpec(d, 0.25, offset)
        split = near_far_partition(fam, g, 0.2)
        near, far = split.near_set(), split.far_set()
        for cell in map(tuple, cells_meeting_X(g).tolist()):
            lo, hi = sampled_delta_range(fam, g, cell, m=500)
            if cell in far:
                assert lo >= 0.2
            if cell in near:
                assert hi <= 0.6
            # the sampled range is an inner approximation, so membership it
            # rules out must also be ruled out by the exact range
            if lo < 0.2:
                assert cell not in far

    @given(st.sampled_from([1.0, 0.5, 0.25, 0.2, 0.1]), st.floats(0.5, 3.0),
           st.floats(-1, 1), st.integers(1, 2))
    def test_cover_and_purity_whenever_r_at_least_half_s(self, s, factor, offset, d):
        fam = SyntheticFamily.linear(d, 1.0)
        g = GridSpec(d, s, offset)
        split = near_far_partition(fam, g, factor * s)
        assert split.covers()
        assert check_far_purity(split, fam, g)

    def test_overlap_nonempty(self):
        split = near_far_partition(LIN1, GridSpec(1, 0.25), 0.25)
        assert len(split.overlap()) > 0


class TestPurity:
    def test_valid_split(self):
        g = GridSpec(2, 0.5)
        assert check_far_purity(near_far_partition(SyntheticFamily.linear(2), g, 0.25),
                                SyntheticFamily.linear(2), g)

    def test_constructed_counterexample(self):
        # hand-built split declaring the straddling cell [-s/2, s/2) far
        g = GridSpec(1, 0.5, offset=0.25)
        split = NearFarSplit(g, 0.125, near=np.zeros((0, 1), int), far=np.array([[-1], [1]]))
        assert not check_far_purity(split, LIN1, g)

    def test_below_threshold_straddlers_never_far(self):
        g = GridSpec(1, 0.5, offset=0.25)
        split = near_far_partition(LIN1, g, 0.125, require_cover=False)
        assert check_far_purity(split, LIN1, g)


class TestTube:
    def test_examples(self):
        assert tube_volume(SyntheticFamily.linear(2), 0.1) == pytest.approx(0.4)
        assert tube_bound(SyntheticFamily.linear(2), 0.1) == pytest.approx(0.8)
        assert tube_volume(LIN1, 0.25) == 0.5 and tube_bound(LIN1, 0.25) == 1.0
        assert tube_volume(LIN1, 0.0) == 0.0

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_ratio_is_half(self, d):
        fam = SyntheticFamily.linear(d)
        for dl in np.linspace(0.01, 1, 20):
            assert tube_volume(fam, dl) / tube_bound(fam, dl) == 0.5

    def test_volume_against_monte_carlo(self):
        fam = SyntheticFamily.linear(3)
        x = np.random.default_rng(1).uniform(-1, 1, (400_000, 3))
        frac = np.mean(fam.delta_eta(x) <= 0.3)
        assert frac * 8 == pytest.approx(tube_volume(fam, 0.3), abs=4 * 8 * np.sqrt(0.3 * 0.7 / 4e5))


class TestEstimators:
    def test_alpha_linear(self):
        assert 0.95 <= estimate_me(LIN1, 10**6, [0.5, 0.25, 0.1, 0.05], seed=1).exponent <= 1.05

    def test_alpha_power_mass(self):
        fam = SyntheticFamily.power_mass(1, 2.0, 1.0)
        assert 1.9 <= estimate_me(fam, 10**6, [0.5, 0.25, 0.1, 0.05], seed=1).exponent <= 2.1

    def test_single_point(self):
        with pytest.raises(EstimationError):
            estimate_me(LIN1, 1000, [0.5], seed=1)
        with pytest.raises(EstimationError):
            estimate_mne(LIN1, 1000, [1.0], seed=1)

    def test_beta(self):
        assert 1.85 <= estimate_mne(LIN1, 10**6, seed=2).exponent <= 2.15
        fam = SyntheticFamily.power_mass(1, 2.0, 1.0)
        assert 2.8 <= estimate_mne(fam, 10**6, seed=2).exponent <= 3.2

    def test_q(self):
        assert 0.9 <= estimate_ne(LIN1, 10**6, seed=3).exponent <= 1.1
        assert 0.45 <= estimate_ne(SyntheticFamily.linear(1, 2.0), 10**6, seed=3).exponent <= 0.55

    def test_far_noise_q_below_linear(self):
        eps = [1e-2, 1e-3, 1e-4, 1e-5]
        lin = estimate_ne(SyntheticFamily.linear(1, 1.0), 10**6, eps, seed=4).exponent
        far = estimate_ne(SyntheticFamily.far_noise(1, 1.0), 10**6, eps, seed=4).exponent
        assert far < lin - 0.1

    def test_zero_probabilities_excluded(self):
        est = estimate_me(LIN1, 100, [0.5, 0.25, 1e-9], seed=0)
        assert len(est.t_used) == 2

    def test_consistency_improves(self):
        errs = [np.mean([abs(estimate_me(LIN1, m, seed=k).exponent - 1) for k in range(5)])
                for m in (10**4, 10**6)]
        assert errs[1] < errs[0]


class TestControl:
    @pytest.mark.parametrize("fam", [LIN1, SyntheticFamily.power_mass(2, 2.0, 1.5)])
    def test_exact_equality(self, fam):
        lo = check_lower_control(fam, 10**5, seed=0)
        up = check_upper_control(fam, 10**5, seed=0)
        assert lo.holds and lo.worst_ratio == 1.0
        assert up.holds and up.worst_ratio == 1.0

    def test_far_noise(self):
        fam = SyntheticFamily.far_noise(1, 1.0)
        assert not check_lower_control(fam, 10**5, seed=0).holds
        assert check_upper_control(fam, 10**5, seed=0).holds
