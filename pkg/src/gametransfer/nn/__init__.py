from gametransfer.nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from gametransfer.nn.network import (
    Network, NetworkConfig, loss, loss_and_grads, masked_softmax, masked_softmax_from_mask,
)
from gametransfer.nn.optim import Optimizer, OptimizerConfig

__all__ = [
    "CheckpointError", "Network", "NetworkConfig", "Optimizer", "OptimizerConfig",
    "load_checkpoint", "loss", "loss_and_grads", "masked_softmax",
    "masked_softmax_from_mask", "save_checkpoint",
]
