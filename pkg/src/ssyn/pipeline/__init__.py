"""Orchestration: configuration, checkpoints, the two training stages,
inference, evaluation, and artifact export."""

from .checkpoint import CheckpointState, load_checkpoint, save_checkpoint
from .config import Config, load_config, parse_config
from .inference import evaluate, export_artifacts, infer
from .training import train_decoder, train_encoder

__all__ = [
    "Config",
    "load_config",
    "parse_config",
    "CheckpointState",
    "save_checkpoint",
    "load_checkpoint",
    "train_encoder",
    "train_decoder",
    "infer",
    "evaluate",
    "export_artifacts",
]
