"""Copula-based Gaussian kernel dependency measure.

Quick start::

    >>> import numpy as np
    >>> from cgkdm import Sample, rank_transform, estimate
    >>> x = np.arange(1.0, 21.0)
    >>> p = rank_transform(Sample(np.column_stack([x, x ** 3])))
    >>> round(estimate(p, 1.0), 10)
    1.0
"""
from ._backend import BACKEND
from .baselines import cgkdm_weighted_dcor_check, dcor, kendall, mv_spearman_rho2, pearson, spearman, weighted_dcor
from .copula import (
    DiscreteDistribution,
    PseudoSample,
    Sample,
    TiePolicy,
    empirical_copula,
    max_copula_grid,
    product_copula_grid,
    rank_transform,
    read_csv,
)
from .datagen import CorrelationMatrix, Scenario, sample_mvn, sample_mvt, sample_scenario
from .errors import CGKDMError, DataError, NumericError
from .estimator import estimate, estimate_dim2_centered, estimate_squared, estimate_type_b, estimate_type_u, estimator_terms
from .independence import NullMoments, TestMethod, TestReport, asymptotic_moments, exact_null_moments, run_test
from .kernels import Bandwidth, gamma_sq, kappa, lambda_fn, normalizer
from .theory import cgkdm_bvn, cgkdm_population_mc, hermite_coeffs

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bandwidth",
    "CGKDMError",
    "CorrelationMatrix",
    "DataError",
    "DiscreteDistribution",
    "NullMoments",
    "NumericError",
    "PseudoSample",
    "Sample",
    "Scenario",
    "TestMethod",
    "TestReport",
    "TiePolicy",
    "asymptotic_moments",
    "cgkdm_bvn",
    "cgkdm_population_mc",
    "cgkdm_weighted_dcor_check",
    "dcor",
    "empirical_copula",
    "estimate",
    "estimate_dim2_centered",
    "estimate_squared",
    "estimate_type_b",
    "estimate_type_u",
    "estimator_terms",
    "exact_null_moments",
    "gamma_sq",
    "hermite_coeffs",
    "kappa",
    "kendall",
    "lambda_fn",
    "max_copula_grid",
    "mv_spearman_rho2",
    "normalizer",
    "pearson",
    "product_copula_grid",
    "rank_transform",
    "read_csv",
    "run_test",
    "sample_mvn",
    "sample_mvt",
    "sample_scenario",
    "spearman",
    "weighted_dcor",
]
