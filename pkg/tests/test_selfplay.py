import numpy as np
import pytest

from gametransfer import codec
from gametransfer.games import hex_game, line_game
from gametransfer.mcts import NetEvaluator, SearchConfig, UniformEvaluator
from gametransfer.nn.checkpoint import load_checkpoint, payload_bytes
from gametransfer.nn.network import Network, NetworkConfig
from gametransfer.nn.optim import OptimizerConfig
from gametransfer.selfplay import (
    ReplayBuffer, TrainConfig, TrainingExample, play_episode, self_play_episode, train_loop,
)
from gametransfer.geometry import P1


class _Evaluator(UniformEvaluator):
    def __init__(self, game):
        super().__init__(codec.build_action_spec(game))
        self.state_spec = codec.build_state_spec(game)


def test_episode_targets_and_outcomes(rng):
    game = hex_game(3)
    examples, final = play_episode(game, _Evaluator(game), SearchConfig(iterations=20), rng)
    assert len(examples) == final.ply
    winner = final.outcome.winner
    for k, ex in enumerate(examples):
        to_move = P1 if k % 2 == 0 else 3 - P1
        assert ex.z == (1.0 if to_move == winner else -1.0)
        assert abs(ex.policy.sum() - 1) < 1e-9 and (ex.policy >= 0).all()
        assert not ex.policy[~ex.legal].any()


def test_drawn_episode_has_zero_targets(rng):
    game = line_game("square", 2, 3)  # nobody can make three on 2x2
    examples, final = play_episode(game, _Evaluator(game), SearchConfig(iterations=10), rng)
    assert final.outcome.status == "draw"
    assert [ex.z for ex in examples] == [0.0] * 4


def test_self_play_episode_with_network(rng):
    game = line_game("square", 3, 3)
    net = Network.initialize(NetworkConfig(9, 3, hidden=4, blocks=1, layers_per_block=1), rng)
    examples = self_play_episode(game, net, SearchConfig(iterations=8), rng)
    assert 5 <= len(examples) <= 9
    assert examples[0].state.shape == (9, 3, 3)


def test_replay_buffer_fifo_and_warmup(rng):
    buf = ReplayBuffer(capacity=5, warmup=3)
    ex = lambda i: TrainingExample(np.full((1, 1, 1), i), np.ones((1, 1, 1)),
                                   np.ones((1, 1, 1), bool), 0.0)
    buf.extend(ex(i) for i in range(2))
    with pytest.raises(RuntimeError):
        buf.sample(2, rng)
    buf.extend(ex(i) for i in range(2, 8))
    assert len(buf) == 5
    assert sorted(int(e.state[0, 0, 0]) for e in buf) == [3, 4, 5, 6, 7]
    x, pi, z, mask = buf.sample(4, rng)
    assert x.shape == (4, 1, 1, 1) and mask.dtype == bool


def tiny_train(epochs=2, **kw):
    return TrainConfig(epochs=epochs, episodes_per_epoch=2, batches_per_epoch=2, batch_size=8,
                       replay_capacity=500, replay_warmup=kw.pop("warmup", 10),
                       search=SearchConfig(iterations=kw.pop("iterations", 8)), **kw)


def test_train_loop_writes_checkpoints_and_log(tmp_path):
    game = line_game("square", 3, 3)
    cfg = NetworkConfig(9, 3, hidden=4, blocks=1, layers_per_block=1)
    net, history = train_loop(game, cfg, tiny_train(), seed=1, out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["epoch_0000.gmrf", "epoch_0001.gmrf", "final.gmrf", "train_log.jsonl"]
    assert len((tmp_path / "train_log.jsonl").read_text().splitlines()) == 2
    assert history[0]["buffer"] >= 10
    assert all(np.isfinite(h["loss"]) for h in history)
    loaded, meta = load_checkpoint(tmp_path / "final.gmrf")
    assert payload_bytes(loaded) == payload_bytes(net)
    assert meta["game"] == game.to_dict() and meta["epoch"] == 1


def test_warmup_is_filled_before_first_step():
    game = line_game("square", 3, 3)
    cfg = NetworkConfig(9, 3, hidden=4, blocks=1, layers_per_block=1)
    _, history = train_loop(game, cfg, tiny_train(epochs=1, warmup=60), seed=2)
    assert history[0]["buffer"] >= 60 and history[0]["episodes"] > 2


def test_training_is_deterministic(tmp_path):
    game = line_game("square", 3, 3)
    cfg = NetworkConfig(9, 3, hidden=4, blocks=1, layers_per_block=1)
    for run in ("a", "b"):
        train_loop(game, cfg, tiny_train(), seed=5, out_dir=tmp_path / run)
    for name in ("epoch_0001.gmrf", "final.gmrf"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_fine_tuning_starts_from_given_network(rng):
    game = line_game("square", 3, 3)
    net = Network.initialize(NetworkConfig(9, 3, hidden=4, blocks=1, layers_per_block=1), rng)
    before = payload_bytes(net)
    out, _ = train_loop(game, None, tiny_train(epochs=1), seed=0, net=net)
    assert payload_bytes(net) == before  # input untouched
    assert payload_bytes(out) != before


def test_train_loop_rejects_mismatched_network(rng):
    net = Network.initialize(NetworkConfig(9, 51, hidden=4, blocks=1), rng)
    with pytest.raises(ValueError):
        train_loop(line_game("square", 3, 3), None, tiny_train(), seed=0, net=net)


@pytest.mark.slow
def test_loss_trends_down_on_line_game():
    game = line_game("square", 5, 4)
    train = TrainConfig(epochs=20, episodes_per_epoch=4, batches_per_epoch=16, batch_size=32,
                        replay_capacity=4000, replay_warmup=64,
                        search=SearchConfig(iterations=16),
                        optimizer=OptimizerConfig(lr=0.01))
    _, history = train_loop(game, NetworkConfig(9, 3, hidden=12, blocks=1), train, seed=0)
    losses = [h["loss"] for h in history]
    assert np.median(losses[15:]) < np.median(losses[:5])
