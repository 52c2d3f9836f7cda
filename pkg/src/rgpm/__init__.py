"""Recursive Gaussian process regression with soft monotonicity constraints."""
from .constraints import (ConstraintReport, InequalityConstraint, apply_constraints,
                          batch_constraint_update, build_monotonicity_matrix,
                          build_output_constraint_matrix, relu_pseudo_measurement)
from .errors import ConfigError, NumericalError, SnapshotError
from .kernel import BasisGrid, KernelConfig, build_basis_grid, denormalize, normalize, se_kernel
from .rgp import Prediction, RgpModel, init_model

__version__ = "0.1.0"
