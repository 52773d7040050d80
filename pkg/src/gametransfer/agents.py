"""Move-choosing agents used in evaluation matches."""
from __future__ import annotations

import math

import numpy as np

from gametransfer import codec
from gametransfer.games import GameState, apply_move
from gametransfer.mcts import NetEvaluator, SearchConfig, run_search, select_move
from gametransfer.nn.network import Network


class RandomAgent:
    name = "random"

    def select(self, state: GameState, rng: np.random.Generator):
        moves = state.legal
        return moves[int(rng.integers(len(moves)))]


class MCTSAgent:
    def __init__(self, net: Network, game, search: SearchConfig, name: str = "mcts"):
        state_spec = codec.build_state_spec(game)
        action_spec = codec.build_action_spec(game)
        if (net.config.c_state, net.config.c_action) != (len(state_spec), len(action_spec)):
            raise ValueError(
                f"network with {net.config.c_state} state / {net.config.c_action} action channels "
                f"cannot play {game.label} ({len(state_spec)} / {len(action_spec)})")
        self.evaluator = NetEvaluator(net, state_spec, action_spec)
        self.search = search
        self.name = name

    def select(self, state: GameState, rng: np.random.Generator):
        result = run_search(state, self.evaluator, self.search, rng)
        return select_move(result.visits(), self.evaluator.action_spec, state.ply,
                           self.search.temperature_moves, rng)


class _UCTNode:
    __slots__ = ("state", "moves", "N", "W", "children")

    def __init__(self, state):
        self.state = state
        self.moves = state.legal
        self.N = np.zeros(len(self.moves))
        self.W = np.zeros(len(self.moves))
        self.children = [None] * len(self.moves)


class UCTAgent:
    """Plain UCT: UCB1 selection, uniformly random rollouts, no network."""

    name = "uct"

    def __init__(self, iterations: int, c: float = math.sqrt(2)):
        self.iterations = iterations
        self.c = c

    def select(self, state: GameState, rng: np.random.Generator):
        root = _UCTNode(state)
        for _ in range(self.iterations):
            node, path = root, []
            while True:
                unvisited = np.flatnonzero(node.N == 0)
                if len(unvisited):
                    i = int(unvisited[rng.integers(len(unvisited))])
                else:
                    ucb = node.W / node.N + self.c * np.sqrt(math.log(node.N.sum()) / node.N)
                    i = int(np.argmax(ucb))
                path.append((node, i))
                child = node.children[i]
                if child is None:
                    nxt = apply_move(node.state, node.moves[i])
                    if not nxt.terminal:
                        node.children[i] = _UCTNode(nxt)
                    final = self._rollout(nxt, rng)
                    break
                if isinstance(child, _UCTNode):
                    node = child
                    continue
            for n, i in path:
                n.N[i] += 1
                n.W[i] += final.outcome.value_for(n.state.to_move)
        return root.moves[int(np.argmax(root.N))]

    @staticmethod
    def _rollout(state, rng):
        while not state.terminal:
            moves = state.legal
            state = apply_move(state, moves[int(rng.integers(len(moves)))])
        return state
