"""PUCT tree search guided by a policy-value network.

Edges are individual legal moves. Aliased moves (moves sharing a policy
cell) each carry the full prior of their shared cell, so the network cannot
tell them apart but the search still can. Results are reported per alias
group, which is what the policy target and move selection consume.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from gametransfer import codec
from gametransfer.games import GameState, apply_move
from gametransfer.nn.network import InferenceNet, Network


@dataclass
class SearchConfig:
    iterations: int = 100
    c_puct: float = 1.5
    dirichlet_alpha: Optional[float] = 0.3
    noise_weight: float = 0.25
    temperature_moves: int = 8
    take_known_wins: bool = True  # always follow an edge already seen to win on the spot

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("search needs at least one iteration")
        if not 0.0 <= self.noise_weight < 1.0:
            raise ValueError("noise_weight must lie in [0, 1)")

    @property
    def noisy(self) -> bool:
        return bool(self.dirichlet_alpha) and self.noise_weight > 0

    def to_dict(self):
        return asdict(self)


class NetEvaluator:
    """Maps a game state to (move priors source logits, value) via a network."""

    def __init__(self, net: Network, state_spec, action_spec):
        self.net = InferenceNet(net)
        self.state_spec = state_spec
        self.action_spec = action_spec

    def __call__(self, state: GameState):
        x = codec.encode_state(state, self.state_spec)
        return self.net.predict(x)


class UniformEvaluator:
    """Zero logits and zero value: the behaviour of an all-zero network."""

    def __init__(self, action_spec):
        self.action_spec = action_spec
        self._zeros = np.zeros(action_spec.shape)

    def __call__(self, state):
        return self._zeros, 0.0


class Node:
    __slots__ = ("state", "moves", "flat", "prior", "N", "W", "children", "win_edge")

    def __init__(self, state: GameState, moves, flat, prior):
        self.state = state
        self.moves = moves
        self.flat = flat          # flat policy index per move
        self.prior = prior
        self.N = np.zeros(len(moves))
        self.W = np.zeros(len(moves))
        self.children: list = [None] * len(moves)
        self.win_edge: Optional[int] = None  # edge known to end the game in the mover's favour

    @property
    def visits(self) -> float:
        return float(self.N.sum())

    def q(self) -> np.ndarray:
        return np.divide(self.W, self.N, out=np.zeros_like(self.W), where=self.N > 0)


@dataclass
class SearchResult:
    root: Node
    action_spec: object

    @property
    def moves(self):
        return self.root.moves

    @property
    def counts(self) -> np.ndarray:
        return self.root.N

    def visits(self) -> dict:
        """Visit count per concrete move."""
        return {m: int(n) for m, n in zip(self.root.moves, self.root.N)}

    def group_visits(self) -> dict:
        """Summed visit count per policy cell (alias group), keyed by flat index."""
        out: dict = {}
        for f, n in zip(self.root.flat, self.root.N):
            out[int(f)] = out.get(int(f), 0) + int(n)
        return out


def _expand(state: GameState, evaluator, action_spec):
    moves = state.legal
    logits, value = evaluator(state)
    flat = np.array([action_spec.flat_of(m) for m in moves])
    uniq, inverse = np.unique(flat, return_inverse=True)
    vals = logits.reshape(-1)[uniq]
    e = np.exp(vals - vals.max())
    probs = e / e.sum()
    return Node(state, moves, flat, probs[inverse]), value


def run_search(root_state: GameState, evaluator, config: SearchConfig,
               rng: np.random.Generator) -> SearchResult:
    if root_state.terminal:
        raise ValueError("cannot search from a terminal state")
    spec = evaluator.action_spec
    root, _ = _expand(root_state, evaluator, spec)
    if config.noisy and len(root.moves) > 1:
        noise = rng.dirichlet([config.dirichlet_alpha] * len(root.moves))
        root.prior = (1 - config.noise_weight) * root.prior + config.noise_weight * noise
    c = config.c_puct
    for _ in range(config.iterations):
        node = root
        path = []
        while True:
            if config.take_known_wins and node.win_edge is not None:
                i = node.win_edge
            else:
                total = node.N.sum()
                score = node.q() + c * node.prior * math.sqrt(total) / (1.0 + node.N)
                if total == 0:
                    # No visits yet: fall back to the prior so the first pick is informed.
                    score = node.prior
                i = int(np.argmax(score))
            path.append((node, i))
            child = node.children[i]
            if child is None:
                state = apply_move(node.state, node.moves[i])
                if state.terminal:
                    value = state.outcome.value_for(state.to_move)
                    leaf_player = state.to_move
                    node.children[i] = state  # terminal marker: a bare state
                    if state.outcome.winner == node.state.to_move and node.win_edge is None:
                        node.win_edge = i
                else:
                    child, value = _expand(state, evaluator, spec)
                    node.children[i] = child
                    leaf_player = state.to_move
                break
            if isinstance(child, GameState):
                value = child.outcome.value_for(child.to_move)
                leaf_player = child.to_move
                break
            node = child
        for n, i in path:
            v = value if n.state.to_move == leaf_player else -value
            # Edge stats are stored from the perspective of the player choosing at n.
            n.N[i] += 1
            n.W[i] += v
    return SearchResult(root, spec)


def select_move(visits: dict, action_spec, ply: int, temperature_moves: int,
                rng: np.random.Generator):
    """Pick a move from per-move visit counts.

    Counts are pooled per alias group. Before ``temperature_moves`` plies a
    group is sampled proportionally to its visits, afterwards the most
    visited group wins with ties going to the lowest flat policy index.
    Within a group a concrete move is drawn uniformly.
    """
    groups: dict = {}
    for mv, n in visits.items():
        f = action_spec.flat_of(mv)
        groups.setdefault(f, [0, []])
        groups[f][0] += n
        groups[f][1].append(mv)
    keys = sorted(groups)
    counts = np.array([groups[k][0] for k in keys], dtype=float)
    if not keys or counts.sum() <= 0:
        raise ValueError("no visits to select from")
    if ply < temperature_moves:
        k = keys[int(rng.choice(len(keys), p=counts / counts.sum()))]
    else:
        k = keys[int(np.argmax(counts))]  # first max = lowest index
    members = groups[k][1]
    if len(members) == 1:
        return members[0]
    return members[int(rng.integers(len(members)))]
