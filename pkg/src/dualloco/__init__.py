"""Feature-partitioned distributed estimation with one round of random-feature exchange.

Each of K workers owns a block of columns, compresses it with an SRHT, and the
compressed blocks are summed across workers. Every worker then solves a local
dual problem over its raw columns plus the summed features of the others and
returns the coefficients of its own columns.
"""
from ._backend import BACKEND
from .core import Dataset, FeaturePartition, FitConfig, PrimalSolution, partition_features, slice_columns
from .losses import LossFamily, conjugate_value, coordinate_update, loss_value
from .metrics import MetricsRecord, normalized_mse, normalized_param_mse
from .runtime import (
    CommunicationLog,
    cross_validate,
    fit,
    numerical_rank,
    predict,
    predict_labels,
    theoretical_error_bound,
)
from .sketch import SrhtSpec, fwht_in_place, make_srht, project_block, spectral_deviation
from .solver import ConvergenceError, duality_gap, exact_solve, local_dual_solve

__version__ = "0.1.0"
