"""Joint multifractal analysis of paired series by bi-order and uni-order
partition functions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DataError,
    DegenerateInputError,
    DomainError,
    FitError,
    JointMFError,
    ModelError,
    ParameterError,
    SingularParameterError,
    ToleranceError,
)
from .legendre import JointSpectrum, double_legendre, monofractal_deviation, uni_legendre  # noqa: E402
from .measures import (  # noqa: E402
    BfbmSpec,
    BinomialSpec,
    Measure,
    PriceSeries,
    gen_bfbm,
    gen_binomial,
    gen_binomial_pair,
    path_to_measure,
    series_to_measure,
    volatility_from_prices,
)
from .partition import (  # noqa: E402
    BoxSums,
    MomentGrid,
    PartitionTable,
    ScaleSet,
    canonical_measures,
    integrate_boxes,
    joint_partition,
    uni_partition,
)
from .scaling import ExponentSurfaces, FitResult, direct_estimates, fit_tau, tau_individual, uni_direct  # noqa: E402
