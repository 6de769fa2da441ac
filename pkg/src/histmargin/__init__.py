"""Grid histogram classification with exact risk oracles for synthetic margin families."""

from .errors import (
    CapacityError,
    DatasetFormatError,
    DimensionError,
    DomainError,
    EmptySampleError,
    EstimationError,
    HistMarginError,
    OutOfRegimeError,
    PreconditionError,
)
from .grid import CellBox, GridSpec, cell_bounds, cell_of, cells_meeting_X
from .hist import (
    HistogramClassifier,
    erm_verify,
    fit,
    infinite_sample_fit,
    make_s_grid,
    tvhr_fit,
)
from .margin import (
    NearFarSplit,
    check_far_purity,
    check_lower_control,
    check_upper_control,
    estimate_me,
    estimate_mne,
    estimate_ne,
    near_far_partition,
    tube_volume,
)
from .rates import (
    RateParams,
    comparison_exponents,
    fit_loglog,
    oracle_bound,
    our_exponent,
    run_rate_experiment,
    s_schedule,
    simplified_exponent,
    theoretical_constants,
)
from .risk import (
    classification_loss,
    empirical_risk,
    excess_risk_exact,
    excess_risk_mc,
    risk_split_check,
    variance_bound_check,
)
from .synth import LabeledSample, MarginProfile, SyntheticFamily, import_dataset

__version__ = "0.1.0"
