"""Experiment configuration: one JSON file per experiment, fully defaulted."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from gametransfer.games import GameConfig
from gametransfer.mcts import SearchConfig
from gametransfer.nn.network import NetworkConfig
from gametransfer.nn.optim import OptimizerConfig
from gametransfer.selfplay import TrainConfig


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class NetSection:
    hidden: Optional[int] = None
    hidden_multiplier: int = 2
    blocks: int = 2
    layers_per_block: int = 2
    value_channels: int = 4

    def network_config(self, c_state: int, c_action: int) -> NetworkConfig:
        hidden = self.hidden if self.hidden is not None else self.hidden_multiplier * c_state
        return NetworkConfig(c_state, c_action, hidden, self.blocks, self.layers_per_block,
                             self.value_channels)


def default_eval_search() -> SearchConfig:
    return SearchConfig(iterations=100, dirichlet_alpha=None, noise_weight=0.0,
                        temperature_moves=2)


@dataclass
class ExperimentConfig:
    game: GameConfig
    network: NetSection = field(default_factory=NetSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval_search: SearchConfig = field(default_factory=default_eval_search)
    seed: int = 0
    out: str = "runs/experiment"

    def to_dict(self) -> dict:
        train = self.train.to_dict()
        return {"game": self.game.to_dict(), "network": vars(self.network).copy(),
                "train": train, "eval_search": self.eval_search.to_dict(),
                "seed": self.seed, "out": self.out}


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(where, f"expected an object, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}", "unknown key")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    allowed = {"game", "network", "train", "eval_search", "seed", "out"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    if "game" not in data:
        raise ConfigError("game", "missing required field")
    game_d = data["game"]
    if not isinstance(game_d, dict):
        raise ConfigError("game", "expected an object")
    for key in ("family", "side"):
        if key not in game_d:
            raise ConfigError(f"game.{key}", "missing required field")
    try:
        game = GameConfig.from_dict(game_d)
    except ValueError as exc:
        raise ConfigError("game", str(exc)) from None
    network = _build(NetSection, data.get("network", {}), "network")
    train_d = dict(data.get("train", {}))
    if not isinstance(train_d, dict):
        raise ConfigError("train", "expected an object")
    search = _build(SearchConfig, train_d.pop("search", {}), "train.search")
    optim = _build(OptimizerConfig, train_d.pop("optimizer", {}), "train.optimizer")
    train = _build(TrainConfig, {**train_d, "search": search, "optimizer": optim}, "train")
    eval_d = data.get("eval_search")
    eval_search = (default_eval_search() if eval_d is None
                   else _build(SearchConfig, {**default_eval_search().to_dict(), **eval_d},
                               "eval_search"))
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    out = data.get("out", "runs/experiment")
    if not isinstance(out, str):
        raise ConfigError("out", "must be a string path")
    return ExperimentConfig(game, network, train, eval_search, seed, out)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config(data)
