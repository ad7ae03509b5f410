"""Bentkus-type confidence sequences for the mean of bounded observations."""
from .apps import adaptive_stop, best_arm, confseq_factory, hardness_h1
from .bentkus import (
    BentkusParams,
    QuantileCache,
    bentkus_quantile,
    bentkus_tail,
    p2_binomial,
    p2_quantile_binomial,
)
from .binom import BinomialTable, normal_inv_cdf
from .confseq import METHODS, ConfidenceInterval, make_confseq, update
from .errors import DomainError, NumericError
from .stitching import StitchConfig, adaptive_bentkus_bound, epoch, zeta
from .variance import VarEstimatorState, var_upper_bound

__all__ = [
    "adaptive_stop",
    "best_arm",
    "confseq_factory",
    "hardness_h1",
    "BentkusParams",
    "QuantileCache",
    "bentkus_quantile",
    "bentkus_tail",
    "p2_binomial",
    "p2_quantile_binomial",
    "BinomialTable",
    "normal_inv_cdf",
    "METHODS",
    "ConfidenceInterval",
    "make_confseq",
    "update",
    "DomainError",
    "NumericError",
    "StitchConfig",
    "adaptive_bentkus_bound",
    "epoch",
    "zeta",
    "VarEstimatorState",
    "var_upper_bound",
]
