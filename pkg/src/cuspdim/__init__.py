"""Numerics for cusp excursions of diagonal flows on spaces of lattices.

Four labs: shortest vectors and weighted cusp functions on unimodular
lattices, one-parameter diagonal flows with badly-approximable
classification, Haar-random measure estimates near the cusp, and
survivor covers with box-counting dimension fits.
"""

from .covering import (
    CoverLevel,
    CoverResult,
    CoveringBound,
    DimensionEstimate,
    Tessellation,
    box_dimension_fit,
    calibrate_K3,
    cf_digit_oracle,
    count_S_rt,
    count_S_rt_brute,
    covering_bound,
    dim_upper_formula,
    lemma61_bound,
    survivor_cover,
    tessellation_new,
)
from .errors import (
    BudgetExceeded,
    CuspDimError,
    DegenerateFit,
    DeterminantError,
    DimensionMismatch,
    DomainError,
    EnumerationBudgetExceeded,
    RankError,
    SamplerStall,
    UnsupportedDimension,
    ValidationError,
)
from .flows import (
    BadVerdict,
    FlowSpec,
    OrbitProfile,
    classify_from_profile,
    dani_classify,
    direct_bad_constant,
    g_t,
    orbit_profile,
    u_A,
)
from .haar import (
    HaarSample,
    InclusionReport,
    MeasureEstimate,
    ScalingFit,
    admissible_radius,
    core_inclusion_check,
    estimate_mu_U,
    nondivergence_profile,
    sample_sl2_haar,
    sampler_calibration,
    siegel_prediction,
)
from .lattices import (
    EQUAL_WEIGHTS_2D,
    Lattice,
    ShortVec,
    WeightVector,
    delta,
    delta_weighted,
    injectivity_shape,
    make_lattice,
    quasinorm,
    shortest_vector,
    shortest_vector_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "BadVerdict",
    "BudgetExceeded",
    "CoverLevel",
    "CoverResult",
    "CoveringBound",
    "CuspDimError",
    "DegenerateFit",
    "DeterminantError",
    "DimensionEstimate",
    "DimensionMismatch",
    "DomainError",
    "EnumerationBudgetExceeded",
    "EQUAL_WEIGHTS_2D",
    "FlowSpec",
    "HaarSample",
    "InclusionReport",
    "Lattice",
    "MeasureEstimate",
    "OrbitProfile",
    "RankError",
    "SamplerStall",
    "ScalingFit",
    "ShortVec",
    "Tessellation",
    "UnsupportedDimension",
    "ValidationError",
    "WeightVector",
    "admissible_radius",
    "box_dimension_fit",
    "calibrate_K3",
    "cf_digit_oracle",
    "classify_from_profile",
    "core_inclusion_check",
    "count_S_rt",
    "count_S_rt_brute",
    "covering_bound",
    "dani_classify",
    "delta",
    "delta_weighted",
    "dim_upper_formula",
    "direct_bad_constant",
    "estimate_mu_U",
    "g_t",
    "injectivity_shape",
    "lemma61_bound",
    "make_lattice",
    "nondivergence_profile",
    "orbit_profile",
    "quasinorm",
    "sample_sl2_haar",
    "sampler_calibration",
    "shortest_vector",
    "shortest_vector_weighted",
    "siegel_prediction",
    "survivor_cover",
    "tessellation_new",
    "u_A",
]
