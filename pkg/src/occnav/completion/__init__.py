from .ops import (
    CcaParams,
    SeparableAttentionParams,
    depthwise_separable_conv,
    dsconv_forward,
    dsconv_backward,
    cca_forward,
    cca_forward_backward,
    separable_attention,
    separable_attention_backward,
)
from .baseline import PredictedOccupancy, baseline_predictor
from .model import CompletionModel, completion_forward, train_toy, voxel_iou
from .datasets import wall_gap_scene, wall_gap_dataset
from .weights_io import save_weights, load_weights

__all__ = [
    "CcaParams",
    "SeparableAttentionParams",
    "depthwise_separable_conv",
    "dsconv_forward",
    "dsconv_backward",
    "cca_forward",
    "cca_forward_backward",
    "separable_attention",
    "separable_attention_backward",
    "PredictedOccupancy",
    "baseline_predictor",
    "CompletionModel",
    "completion_forward",
    "train_toy",
    "voxel_iou",
    "wall_gap_scene",
    "wall_gap_dataset",
    "save_weights",
    "load_weights",
]
