"""Dependency-light neural-network core for the roughness predictor."""

from .metrics import MetricsReport, compute_metrics
from .model import Layer, MlpConfig, MlpModel, forward, init_mlp, loss_and_grads
from .train import AdamOptimizer, TrainReport, clip_global_norm, gradient_check, train_mlp

__all__ = [
    "AdamOptimizer",
    "Layer",
    "MetricsReport",
    "MlpConfig",
    "MlpModel",
    "TrainReport",
    "clip_global_norm",
    "compute_metrics",
    "forward",
    "gradient_check",
    "init_mlp",
    "loss_and_grads",
    "train_mlp",
]
