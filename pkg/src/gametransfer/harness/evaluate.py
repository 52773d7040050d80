"""Head-to-head matches between agents with strictly alternating seats."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from gametransfer import codec
from gametransfer.agents import MCTSAgent, RandomAgent, UCTAgent
from gametransfer.games import GameConfig, apply_move, initial_state
from gametransfer.geometry import P1, P2
from gametransfer.mcts import SearchConfig
from gametransfer.nn.checkpoint import load_checkpoint
from gametransfer.nn.network import Network, NetworkConfig

BASELINES = ("random", "uct", "untrained")


@dataclass(frozen=True)
class AgentSpec:
    """How to build an agent inside a (possibly separate) worker process."""

    kind: str                 # checkpoint | random | uct | untrained
    iterations: int = 100
    path: str = ""
    label: str = ""

    @classmethod
    def parse(cls, text: str, iterations: int) -> "AgentSpec":
        if text in BASELINES:
            return cls(text, iterations, label=text)
        net, meta = load_checkpoint(text)
        label = meta.get("source_label") or GameConfig.from_dict(meta["game"]).label
        return cls("checkpoint", iterations, path=str(text), label=label)


def build_agent(spec: AgentSpec, game: GameConfig, search: SearchConfig, seed_seq):
    search = replace(search, iterations=spec.iterations)
    if spec.kind == "random":
        return RandomAgent()
    if spec.kind == "uct":
        return UCTAgent(spec.iterations)
    if spec.kind == "untrained":
        cfg = NetworkConfig(len(codec.build_state_spec(game)), len(codec.build_action_spec(game)),
                            hidden=4 * len(codec.build_state_spec(game)))
        net = Network.initialize(cfg, np.random.default_rng(seed_seq))
        return MCTSAgent(net, game, search, name="untrained")
    net, _ = load_checkpoint(spec.path)
    return MCTSAgent(net, game, search, name=spec.label)


@dataclass
class MatchResult:
    games: list = field(default_factory=list)  # per-game records, ordered by index

    @property
    def games_played(self) -> int:
        return len(self.games)

    @property
    def wins_a(self) -> int:
        return sum(g["winner"] == "A" for g in self.games)

    @property
    def wins_b(self) -> int:
        return sum(g["winner"] == "B" for g in self.games)

    @property
    def draws(self) -> int:
        return sum(g["winner"] == "draw" for g in self.games)

    @property
    def win_pct_a(self) -> float:
        """Draws count as half a win for each side."""
        return win_percentage(self.wins_a, self.draws, self.games_played)

    @property
    def win_pct_b(self) -> float:
        return win_percentage(self.wins_b, self.draws, self.games_played)


def win_percentage(wins: int, draws: int, games: int) -> float:
    return 100.0 * (wins + 0.5 * draws) / games if games else 0.0


def game_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, index])


def play_game(index: int, game: GameConfig, spec_a: AgentSpec, spec_b: AgentSpec,
              search: SearchConfig, master_seed: int, agents=None) -> dict:
    """Game ``index``: A moves first on even indices, B on odd ones."""
    seq = game_seed(master_seed, index)
    seq_a, seq_b, seq_play = seq.spawn(3)
    if agents is None:
        agents = (build_agent(spec_a, game, search, seq_a), build_agent(spec_b, game, search, seq_b))
    agent_a, agent_b = agents
    a_seat = P1 if index % 2 == 0 else P2
    seat = {a_seat: agent_a, 3 - a_seat: agent_b}
    rng = np.random.default_rng(seq_play)
    state = initial_state(game)
    while not state.terminal:
        state = apply_move(state, seat[state.to_move].select(state, rng))
    out = state.outcome
    if out.status == "draw":
        winner = "draw"
    else:
        winner = "A" if out.winner == a_seat else "B"
    return {"index": index, "a_seat": a_seat, "winner": winner, "plies": state.ply}


_WORKER: dict = {}


def _init_worker(args):
    _WORKER["args"] = args


def _play_in_worker(index):
    return play_game(index, *_WORKER["args"])


def play_match(game: GameConfig, spec_a: AgentSpec, spec_b: AgentSpec, n_games: int,
               search: SearchConfig, master_seed: int, workers: int = 1) -> MatchResult:
    args = (game, spec_a, spec_b, search, master_seed)
    if workers <= 1:
        records = [play_game(i, *args) for i in range(n_games)]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(args,)) as pool:
            records = list(pool.map(_play_in_worker, range(n_games)))
    records.sort(key=lambda r: r["index"])
    return MatchResult(records)


CSV_FIELDS = ["family", "source", "target", "agent_a", "agent_b", "games", "wins_a", "wins_b",
              "draws", "win_pct_a", "win_pct_b", "seed", "iters_a", "iters_b"]


def write_results(out_dir, name: str, result: MatchResult, context: dict):
    """Per-game JSON lines plus a one-row aggregate CSV. Returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jsonl = out / f"{name}.jsonl"
    with jsonl.open("w") as fh:
        for rec in result.games:
            fh.write(json.dumps({**context, **rec}, sort_keys=True) + "\n")
    row = {**{k: context.get(k, "") for k in CSV_FIELDS},
           "games": result.games_played, "wins_a": result.wins_a, "wins_b": result.wins_b,
           "draws": result.draws, "win_pct_a": f"{result.win_pct_a:.2f}",
           "win_pct_b": f"{result.win_pct_b:.2f}"}
    csv_path = out / f"{name}.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        w.writerow(row)
    return jsonl, csv_path
