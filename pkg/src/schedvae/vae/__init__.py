"""VAE variants over discrete and continuous schedule encodings."""

from .blocks import conv_plan
from .config import PRESETS, ConfigError, ModelConfig, get_preset
from .heads import (
    LatentBlock,
    TokenEmbedding,
    Unembed,
    kl_divergence,
    loss_continuous,
    loss_discrete,
    reparameterize,
)
from .model import Batch, CheckpointMismatch, Output, VaeModel, end_positions

__all__ = [
    "PRESETS", "ConfigError", "ModelConfig", "get_preset", "conv_plan",
    "LatentBlock", "TokenEmbedding", "Unembed", "kl_divergence", "loss_continuous",
    "loss_discrete", "reparameterize", "Batch", "CheckpointMismatch", "Output", "VaeModel",
    "end_positions",
]
