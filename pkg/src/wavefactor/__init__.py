"""Wave-informed matrix factorization with global optimality certificates.

Decomposes space x time wave measurements into rank-one modes whose spatial
profiles satisfy a discretized Helmholtz constraint, solves the masked
completion variant, and certifies global optimality through an exactly
solvable rank-one subproblem.
"""

from .errors import (CertificateError, DataError, DegenerateColumnError,
                     DimensionError, GridError, StabilityError, StepSizeError,
                     UsageError, WaveFactorError)
from .laplacian import (BoundaryCondition, SpatialOperator, build,
                        filter_response, shifted_metric)
from .objective import (FactorModel, WaveField, gradients, objective_value,
                        optimal_k, regularizer_column)
from .polar import PolarCertificate, certify, line_search_value, lipschitz_bound, solve_polar
from .solver import (SolveStatus, SolveTrace, SolverConfig, append_step,
                     bcd_to_stationary, complete, fit)
from .datagen import LineSpec, StringSpec, gen_line, gen_string, subsample_rows
from .metrics import Partition, mean_entropy, mode_error, partition_energy, svt_oracle

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition", "SpatialOperator", "build", "shifted_metric",
    "filter_response",
    "WaveField", "FactorModel", "regularizer_column", "optimal_k",
    "objective_value", "gradients",
    "PolarCertificate", "line_search_value", "lipschitz_bound", "solve_polar",
    "certify",
    "SolverConfig", "SolveTrace", "SolveStatus", "bcd_to_stationary",
    "append_step", "fit", "complete",
    "StringSpec", "LineSpec", "gen_string", "gen_line", "subsample_rows",
    "Partition", "partition_energy", "mean_entropy", "mode_error", "svt_oracle",
    "WaveFactorError", "DimensionError", "GridError", "StabilityError",
    "DataError", "DegenerateColumnError", "CertificateError", "StepSizeError",
    "UsageError",
]
