# Copyright 2026 The vawm Authors
# SPDX-License-Identifier: Apache-2.0
"""Joint video-action world model."""

from ._vawm import (
    DimensionError,
    Model,
    ParameterError,
    VawmError,
    avg_l2,
    config_hash,
    default_config,
    eval_expert,
    interpolate,
    pdms,
    register_pair,
    simulate_episode,
    train,
    umeyama_align,
)

__all__ = [
    "DimensionError",
    "Model",
    "ParameterError",
    "VawmError",
    "avg_l2",
    "config_hash",
    "default_config",
    "eval_expert",
    "interpolate",
    "pdms",
    "register_pair",
    "simulate_episode",
    "train",
    "umeyama_align",
]
