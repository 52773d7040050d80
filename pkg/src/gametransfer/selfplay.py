"""Self-play episode generation, replay buffer and the training loop."""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from gametransfer import codec
from gametransfer.games import GameConfig, apply_move, initial_state
from gametransfer.mcts import NetEvaluator, SearchConfig, run_search, select_move
from gametransfer.nn.checkpoint import save_checkpoint
from gametransfer.nn.network import Network, NetworkConfig, loss_and_grads
from gametransfer.nn.optim import Optimizer, OptimizerConfig

log = logging.getLogger(__name__)


@dataclass
class TrainingExample:
    state: np.ndarray    # (C_state, H, W)
    policy: np.ndarray   # (C_action, H, W), sums to 1
    legal: np.ndarray    # (C_action, H, W) bool, one cell per alias group
    z: float             # final outcome for the player to move


class ReplayBuffer:
    """FIFO ring buffer; sampling is refused until ``warmup`` examples exist."""

    def __init__(self, capacity: int, warmup: int = 0):
        if capacity < 1:
            raise ValueError("replay capacity must be >= 1")
        self.capacity = capacity
        self.warmup = warmup
        self._items: deque = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    @property
    def ready(self) -> bool:
        return len(self._items) >= self.warmup

    def add(self, example: TrainingExample):
        self._items.append(example)

    def extend(self, examples):
        for ex in examples:
            self.add(ex)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if not self.ready:
            raise RuntimeError(f"replay buffer below warmup ({len(self)} < {self.warmup})")
        idx = rng.integers(len(self._items), size=batch_size)
        items = [self._items[i] for i in idx]
        return (np.stack([e.state for e in items]),
                np.stack([e.policy for e in items]),
                np.array([e.z for e in items]),
                np.stack([e.legal for e in items]))


def play_episode(game: GameConfig, evaluator, search: SearchConfig, rng: np.random.Generator):
    """Self-play one game. Returns (examples, final_state)."""
    state_spec = evaluator.state_spec
    action_spec = evaluator.action_spec
    state = initial_state(game)
    pending = []
    while not state.terminal:
        result = run_search(state, evaluator, search, rng)
        visits = result.visits()
        groups = codec.alias_groups(state.legal, action_spec)
        pending.append((codec.encode_state(state, state_spec),
                        codec.policy_target_from_visits(visits, action_spec),
                        codec.legal_mask(groups, action_spec),
                        state.to_move))
        move = select_move(visits, action_spec, state.ply, search.temperature_moves, rng)
        state = apply_move(state, move)
    examples = [TrainingExample(x, pi, mask, state.outcome.value_for(player))
                for x, pi, mask, player in pending]
    return examples, state


def self_play_episode(game: GameConfig, net: Network, search: SearchConfig,
                      rng: np.random.Generator) -> list[TrainingExample]:
    evaluator = NetEvaluator(net, codec.build_state_spec(game), codec.build_action_spec(game))
    return play_episode(game, evaluator, search, rng)[0]


@dataclass
class TrainConfig:
    epochs: int = 20
    episodes_per_epoch: int = 10
    batches_per_epoch: int = 16
    batch_size: int = 64
    replay_capacity: int = 20_000
    replay_warmup: int = 1_000
    search: SearchConfig = field(default_factory=SearchConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def to_dict(self):
        return asdict(self)


def train_loop(game: GameConfig, net_config: Optional[NetworkConfig], train: TrainConfig,
               seed: int, out_dir=None, net: Optional[Network] = None,
               metadata: Optional[dict] = None,
               on_epoch: Optional[Callable[[dict], None]] = None):
    """Alternate self-play and optimisation for ``train.epochs`` epochs.

    Starts from ``net`` when given (fine-tuning), else from a fresh network
    seeded by ``seed``. Writes ``epoch_NNNN.gmrf`` per epoch plus
    ``final.gmrf`` and a ``train_log.jsonl`` under ``out_dir`` when set.
    Returns (final network, list of per-epoch records).
    """
    ss = np.random.SeedSequence(seed)
    init_seq, play_seq, batch_seq = ss.spawn(3)
    if net is None:
        net = Network.initialize(net_config, np.random.default_rng(init_seq))
    else:
        net = net.copy()
    play_rng = np.random.default_rng(play_seq)
    batch_rng = np.random.default_rng(batch_seq)
    state_spec = codec.build_state_spec(game)
    action_spec = codec.build_action_spec(game)
    if net.config.c_state != len(state_spec) or net.config.c_action != len(action_spec):
        raise ValueError(f"network channels ({net.config.c_state}, {net.config.c_action}) do not "
                         f"fit {game.label} ({len(state_spec)}, {len(action_spec)})")
    buffer = ReplayBuffer(train.replay_capacity, train.replay_warmup)
    opt = Optimizer(train.optimizer)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / "train_log.jsonl"
        log_path.write_text("")
    meta = {"game": game.to_dict(), "seed": seed, "train": train.to_dict(),
            "architecture": "res-conv-conv-logit-pool (generic)"}
    meta.update(metadata or {})
    history = []
    episodes = 0
    step = 0
    for epoch in range(train.epochs):
        evaluator = NetEvaluator(net, state_spec, action_spec)
        n_new = 0
        while n_new < train.episodes_per_epoch or not buffer.ready:
            examples, _ = play_episode(game, evaluator, train.search, play_rng)
            buffer.extend(examples)
            n_new += 1
        episodes += n_new
        losses = []
        for _ in range(train.batches_per_epoch):
            x, pi, z, mask = buffer.sample(train.batch_size, batch_rng)
            stats, grads = loss_and_grads(net, x, pi, z, mask)
            opt.step(net, grads)
            losses.append(stats)
            step += 1
        record = {
            "epoch": epoch,
            "episodes": episodes,
            "buffer": len(buffer),
            "steps": step,
            "loss": float(np.mean([s["loss"] for s in losses])) if losses else None,
            "policy_loss": float(np.mean([s["policy_loss"] for s in losses])) if losses else None,
            "value_loss": float(np.mean([s["value_loss"] for s in losses])) if losses else None,
        }
        history.append(record)
        log.info("epoch %d: %s", epoch, record)
        if on_epoch is not None:
            on_epoch(record)
        if out is not None:
            with log_path.open("a") as fh:
                fh.write(json.dumps(record) + "\n")
            save_checkpoint(net, out / f"epoch_{epoch:04d}.gmrf",
                            {**meta, "epoch": epoch, "step": step})
    if out is not None:
        save_checkpoint(net, out / "final.gmrf", {**meta, "epoch": train.epochs - 1, "step": step})
    return net, history
