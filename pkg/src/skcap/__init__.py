"""Exact discrete information measures, lambda-mutual information over
fractional partitions, and single-letter converse bounds built on them."""

from .dist import (
    Channel,
    JointDist,
    SizeError,
    VarSpec,
    cond_entropy,
    cond_mutual_info,
    entropy,
    marginalize,
    mutual_info,
    push_through,
)
from .fracpart import (
    FractionalPartition,
    Partition,
    optimize_linear,
    preset_partition,
    preset_uniform_km1,
    validate,
    vertices,
)
from .lambda_mi import fano_bound, i_lambda, j_info, partition_bound_check
from .keybound import OptimizerConfig, WiMWCSystem, key_capacity_bound, v_lambda
from .dbbound import InteractiveCode, dependence_balance_sides, simulate_code
from .macregion import GenFeedbackMAC, outer_region, outer_sum_rate

__version__ = "0.1.0"
