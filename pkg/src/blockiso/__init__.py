"""Max-min block estimation for multiple isotonic regression."""

__version__ = "0.1.0"

from .blocks import Block, BlockMean, PrefixTable, block_mean, build_prefix, build_rank_prefix
from .design import (
    Dataset,
    DesignSpec,
    build_lattice,
    dataset_from_points,
    generate_dataset,
    make_rng,
    random_design,
    read_dataset_csv,
    write_dataset_csv,
)
from .estimator import MaxMinBlockRegressor, fit_grid, max_min_estimate, pava
from .exceptions import (
    BlockIsoError,
    ConfigError,
    DegenerateBoundary,
    DegenerateFit,
    EmptyBlock,
    MixedDerivativesPresent,
    NoFeasibleBlock,
    NonFiniteField,
    NotALattice,
    ZeroNoise,
)
from .functions import REGISTRY, TestFunction, get_function, taylor_model
from .limit import SupInfConfig, chernoff_sample, sample_limit_distribution, sample_sheet, sup_inf_statistic
from .minimax import build_perturbation, certify_rate_optimality, two_point_bound
from .rates import (
    RateReport,
    SmoothnessProfile,
    balanced_beta,
    index_sets,
    k_constant,
    kappa_star_argmax,
    kappa_star_fixed_point,
    rate_report,
)
