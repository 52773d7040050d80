"""Desk-scale experiment presets shared by scripts and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass, field

from gametransfer import codec
from gametransfer.games import GameConfig, hex_game
from gametransfer.mcts import SearchConfig
from gametransfer.nn.network import NetworkConfig
from gametransfer.nn.optim import OptimizerConfig
from gametransfer.selfplay import TrainConfig


def desk_network(game: GameConfig, multiplier: int = 4, blocks: int = 2) -> NetworkConfig:
    c_state = len(codec.build_state_spec(game))
    return NetworkConfig(c_state, len(codec.build_action_spec(game)),
                         hidden=multiplier * c_state, blocks=blocks)


@dataclass
class DeskHex:
    """Hex 5x5 from scratch: about 500 self-play games on one CPU core."""

    game: GameConfig = field(default_factory=lambda: hex_game(5))
    train: TrainConfig = field(default_factory=lambda: TrainConfig(
        epochs=50, episodes_per_epoch=10, batches_per_epoch=24, batch_size=64,
        replay_capacity=8_000, replay_warmup=256,
        search=SearchConfig(iterations=64, temperature_moves=4),
        optimizer=OptimizerConfig(kind="adam", lr=2e-3, weight_decay=1e-4)))
    seed: int = 0

    @property
    def network(self) -> NetworkConfig:
        return desk_network(self.game)
