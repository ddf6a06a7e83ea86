"""Forward-pass inference engine for the landmark heatmap network."""

from .model import (
    CONFIGS,
    SMOKE,
    STANDARD,
    NetConfig,
    detect_config,
    forward,
    forward_tensor,
    param_manifest,
)
from .ops import (
    batchnorm3d,
    conv3d,
    expand_rearrange,
    merge_rearrange,
    patch_expand3d,
    patch_merge3d,
    relu,
)
from .weights import WeightStore, init_weights

__all__ = [
    "CONFIGS",
    "SMOKE",
    "STANDARD",
    "NetConfig",
    "WeightStore",
    "batchnorm3d",
    "conv3d",
    "detect_config",
    "expand_rearrange",
    "forward",
    "forward_tensor",
    "init_weights",
    "merge_rearrange",
    "param_manifest",
    "patch_expand3d",
    "patch_merge3d",
    "relu",
]
