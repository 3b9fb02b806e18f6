"""Rényi-type tests for a change in the mean near the ends of a sample."""

from .inference import STATISTICS, TestOutcome, batch_scaled, change_test
from .limits import BRIDGE, GUMBEL, MAX_TWO, LimitLaw, p_value, quantile
from .stats import (
    DegenerateVarianceError,
    TrimSpec,
    cusum_stat,
    darling_erdos_stat,
    renyi_self_normalized,
    renyi_stat,
    renyi_stat_asym,
    trimmed_std_cusum,
    weighted_cusum_stat,
)
from .variance import VarianceConfig, kernel_lrv, split_variance

__all__ = [
    "STATISTICS",
    "TestOutcome",
    "batch_scaled",
    "change_test",
    "BRIDGE",
    "GUMBEL",
    "MAX_TWO",
    "LimitLaw",
    "p_value",
    "quantile",
    "DegenerateVarianceError",
    "TrimSpec",
    "cusum_stat",
    "darling_erdos_stat",
    "renyi_self_normalized",
    "renyi_stat",
    "renyi_stat_asym",
    "trimmed_std_cusum",
    "weighted_cusum_stat",
    "VarianceConfig",
    "kernel_lrv",
    "split_variance",
]
