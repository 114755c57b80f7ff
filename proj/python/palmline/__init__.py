"""Palmprint recognition from deep CNN features."""

from ._core import (
    DEFAULT_MEAN_RGB,
    FEATURE_DIM,
    LinearSvm,
    PalmlineError,
    Weights,
    conv2d,
    dense,
    extract_features,
    input_side,
    local_response_norm,
    maxpool2d,
    palm_roi,
    parameter_count,
    parameter_specs,
    read_image,
    relu,
    run_sweep,
    segment,
    synth_features,
    synth_hand,
    train_count,
)

__all__ = [
    "DEFAULT_MEAN_RGB",
    "FEATURE_DIM",
    "LinearSvm",
    "PalmlineError",
    "Weights",
    "conv2d",
    "dense",
    "extract_features",
    "input_side",
    "local_response_norm",
    "maxpool2d",
    "palm_roi",
    "parameter_count",
    "parameter_specs",
    "read_image",
    "relu",
    "run_sweep",
    "segment",
    "synth_features",
    "synth_hand",
    "train_count",
]
