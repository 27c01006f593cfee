"""Desk-scale differentiable backend: embedding provider, feedforward
scorers with exact gradients, losses, optimizer, and the teacher-forced
training loop."""

from corefkit.learning.losses import (
    cluster_loss,
    cluster_loss_from_logits,
    mention_loss,
    mention_loss_from_scores,
)
from corefkit.learning.model import ModelConfig, ScoringModel
from corefkit.learning.optim import TwoGroupAdam
from corefkit.learning.params import (
    ParameterStore,
    Vocabulary,
    build_vocabulary,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from corefkit.learning.training import TrainConfig, TrainResult, train, write_history_csv

__all__ = [
    "cluster_loss",
    "cluster_loss_from_logits",
    "mention_loss",
    "mention_loss_from_scores",
    "ModelConfig",
    "ScoringModel",
    "TwoGroupAdam",
    "ParameterStore",
    "Vocabulary",
    "build_vocabulary",
    "init_parameters",
    "load_checkpoint",
    "save_checkpoint",
    "TrainConfig",
    "TrainResult",
    "train",
    "write_history_csv",
]
