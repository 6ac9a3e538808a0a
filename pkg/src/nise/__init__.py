"""Simultaneous-equation estimation without instruments (NISE), with OLS/TSLS baselines."""

__version__ = "0.1.0"

from nise.dataset import Dataset
from nise.diagnostics import TestRecord, bartlett_z, first_stage_f, sargan_j
from nise.estimators import (
    canonical_correlations,
    nise_cov,
    nise_fit,
    ols_equation,
    ols_fit,
    tsls_fit,
)
from nise.resample import pairs_bootstrap

__all__ = [
    "Dataset",
    "TestRecord",
    "bartlett_z",
    "canonical_correlations",
    "first_stage_f",
    "nise_cov",
    "nise_fit",
    "ols_equation",
    "ols_fit",
    "pairs_bootstrap",
    "sargan_j",
    "tsls_fit",
]
