"""Structured Gaussian random matrices: bound expressions, Monte Carlo norms and exact moments."""

__version__ = "0.1.0"

from .errors import BudgetError, ModelError, NumericError  # noqa: E402
from .model import (MatrixModel, VariancePattern, build_block, build_covariance,  # noqa: E402
                    build_diagonal, build_pattern, build_rademacher, build_sparse_wigner,
                    build_wigner, load_model)

__all__ = ["__version__", "BudgetError", "ModelError", "NumericError", "MatrixModel",
           "VariancePattern", "build_block", "build_covariance", "build_diagonal",
           "build_pattern", "build_rademacher", "build_sparse_wigner", "build_wigner",
           "load_model"]
