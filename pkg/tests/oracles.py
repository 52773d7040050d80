"""Slow, obviously-correct reference implementations used by the tests."""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from gametransfer.geometry import MoveRecord, P1
from gametransfer.transfer.trees import RuleTree

# -- ordered labeled trees ----------------------------------------------------
# A forest is a tuple of trees; a tree is (label, forest).


def to_forest(tree: RuleTree):
    return ((tree.label, tuple(to_forest(c)[0] for c in tree.children)),)


def to_rule_tree(tree) -> RuleTree:
    label, kids = tree
    return RuleTree(label, tuple(to_rule_tree(k) for k in kids))


def forest_size(forest) -> int:
    return sum(1 + forest_size(kids) for _, kids in forest)


@lru_cache(maxsize=None)
def all_forests(n: int, labels: tuple):
    """Every ordered labeled forest with exactly ``n`` nodes."""
    if n == 0:
        return [()]
    out = []
    for first in range(1, n + 1):  # size of the first tree
        for kids in all_forests(first - 1, labels):
            for label in labels:
                for rest in all_forests(n - first, labels):
                    out.append(((label, kids),) + rest)
    return out


def all_trees(max_nodes: int, labels: tuple):
    return [f[0] for n in range(1, max_nodes + 1) for f in all_forests(n, labels) if len(f) == 1]


def random_tree(rng, max_nodes: int, labels):
    """Random ordered labeled tree via random parent attachment in preorder."""
    n = int(rng.integers(1, max_nodes + 1))
    labels_ = [labels[int(rng.integers(len(labels)))] for _ in range(n)]
    children = [[] for _ in range(n)]
    # node i attaches to a node on the current rightmost path to stay in preorder
    path = [0]
    for i in range(1, n):
        depth = int(rng.integers(len(path)))
        parent = path[depth]
        children[parent].append(i)
        path = path[:depth + 1] + [i]

    def build(i):
        return (labels_[i], tuple(build(k) for k in children[i]))

    return build(0)


def _edits(forest, labels, max_nodes, total):
    """All forests one unit edit (insert / delete / relabel) away."""
    n = len(forest)
    if total < max_nodes:
        for i in range(n + 1):
            for j in range(i, n + 1):
                for lab in labels:
                    yield forest[:i] + ((lab, forest[i:j]),) + forest[j:]
    for k, (lab, kids) in enumerate(forest):
        for other in labels:
            if other != lab:
                yield forest[:k] + ((other, kids),) + forest[k + 1:]
        yield forest[:k] + kids + forest[k + 1:]
        for sub in _edits(kids, labels, max_nodes, total):
            yield forest[:k] + ((lab, sub),) + forest[k + 1:]


def edit_script_distance(a, b) -> int:
    """Length of the shortest unit-cost edit script turning tree ``a`` into ``b``.

    Bidirectional breadth-first search over forests. Intermediate forests are
    capped at max(|a|, |b|) nodes and labels at those occurring in a or b;
    some optimal script (delete, relabel, then insert) always stays inside
    that space, so the cap does not change the minimum.
    """
    fa, fb = (a,), (b,)
    if fa == fb:
        return 0
    labels = tuple(sorted(_labels(fa) | _labels(fb)))
    cap = max(forest_size(fa), forest_size(fb))
    dist = [{fa: 0}, {fb: 0}]
    frontier = [[fa], [fb]]
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        nxt = []
        best = math.inf
        for f in frontier[side]:
            d = dist[side][f]
            for g in _edits(f, labels, cap, forest_size(f)):
                if g in dist[1 - side]:
                    best = min(best, d + 1 + dist[1 - side][g])
                if g not in dist[side]:
                    dist[side][g] = d + 1
                    nxt.append(g)
        if best < math.inf:
            return best
        frontier[side] = nxt
    raise AssertionError("edit graph is connected; search cannot fail")


def _labels(forest):
    out = set()
    for lab, kids in forest:
        out.add(lab)
        out |= _labels(kids)
    return out


# -- tic-tac-toe on a plain 3x3 array ----------------------------------------

LINES3 = [[(r, c) for c in range(3)] for r in range(3)] + \
         [[(r, c) for r in range(3)] for c in range(3)] + \
         [[(i, i) for i in range(3)], [(i, 2 - i) for i in range(3)]]


def ttt_winner(board):
    for line in LINES3:
        vals = {board[r][c] for r, c in line}
        if len(vals) == 1 and 0 not in vals:
            return vals.pop()
    return 0


@lru_cache(maxsize=None)
def ttt_value(board, to_move):
    """Game value for ``to_move`` (+1 win, 0 draw, -1 loss); board is a 3x3 tuple."""
    w = ttt_winner(board)
    if w:
        return 1 if w == to_move else -1
    empty = [(r, c) for r in range(3) for c in range(3) if board[r][c] == 0]
    if not empty:
        return 0
    best = -1
    for r, c in empty:
        child = tuple(tuple(to_move if (i, j) == (r, c) else board[i][j] for j in range(3))
                      for i in range(3))
        best = max(best, -ttt_value(child, 3 - to_move))
    return best


def ttt_immediate_wins(board, to_move):
    wins = []
    for r, c in itertools.product(range(3), range(3)):
        if board[r][c] == 0:
            child = [list(row) for row in board]
            child[r][c] = to_move
            if ttt_winner(child) == to_move:
                wins.append((r, c))
    return wins


def random_must_win_positions(n, rng):
    """Tic-tac-toe positions (move lists) where the side to move must win right now.

    The minimax oracle confirms the position is won and that every move
    other than an immediate win throws the win away.
    """
    out = []
    while len(out) < n:
        board = [[0] * 3 for _ in range(3)]
        moves, player = [], P1
        for _ in range(int(rng.integers(3, 8))):
            empty = [(r, c) for r in range(3) for c in range(3) if board[r][c] == 0]
            r, c = empty[int(rng.integers(len(empty)))]
            board[r][c] = player
            moves.append(MoveRecord.place(player, r, c))
            player = 3 - player
            if ttt_winner(board):
                break
        if ttt_winner(board):
            continue
        wins = set(ttt_immediate_wins(board, player))
        if not wins:
            continue
        assert ttt_value(tuple(map(tuple, board)), player) == 1
        others_win = False
        for r in range(3):
            for c in range(3):
                if board[r][c] == 0 and (r, c) not in wins:
                    child = [row[:] for row in board]
                    child[r][c] = player
                    others_win |= -ttt_value(tuple(map(tuple, child)), 3 - player) == 1
        if not others_win:
            out.append((moves, wins))
    return out


# -- numerics -----------------------------------------------------------------

def brute_softmax(values):
    """Softmax of a plain list using math.exp, no stabilisation tricks beyond the max."""
    m = max(values)
    e = [math.exp(v - m) for v in values]
    s = math.fsum(e)
    return [x / s for x in e]


def finite_difference(f, arr, index, eps=1e-5):
    old = arr[index]
    arr[index] = old + eps
    up = f()
    arr[index] = old - eps
    down = f()
    arr[index] = old
    return (up - down) / (2 * eps)


def relative_error(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a) + abs(b), floor)


def sample_param_indices(params: dict, n: int, rng, must_include=()):
    """``n`` (name, index) pairs, covering every tensor named in ``must_include``."""
    names = sorted(params)
    picks = []
    for name in must_include:
        for _ in range(3):
            picks.append((name, tuple(int(rng.integers(s)) for s in params[name].shape)))
    while len(picks) < n:
        name = names[int(rng.integers(len(names)))]
        picks.append((name, tuple(int(rng.integers(s)) for s in params[name].shape)))
    return picks[:n]


def gradient_check(net, x, pi, z, mask, n_params=200, rng=None, eps=1e-5):
    """Max relative error between backprop and central differences (train-mode loss)."""
    from gametransfer.nn.network import loss, loss_and_grads

    rng = rng or np.random.default_rng(0)
    _, grads = loss_and_grads(net.copy(), x, pi, z, mask, train=True)
    work = net.copy()

    def f():
        logits, value = work.forward(x, train=True)
        return loss(logits, value, pi, z, mask)[0]

    must = [k for k in net.params if ".bn." in k or k.startswith("value.fc")]
    worst = 0.0
    for name, idx in sample_param_indices(net.params, n_params, rng, must):
        num = finite_difference(f, work.params[name], idx, eps)
        worst = max(worst, relative_error(grads[name][idx], num))
    return worst


# -- test data ----------------------------------------------------------------

def random_states(game, n, rng, max_plies=None):
    """``n`` random reachable non-terminal states of ``game``."""
    from gametransfer.games import apply_move, initial_state

    out = []
    while len(out) < n:
        s = initial_state(game)
        target = int(rng.integers(0, max_plies or game.geometry.n_playable))
        for _ in range(target):
            nxt = apply_move(s, s.legal[int(rng.integers(len(s.legal)))])
            if nxt.terminal:
                break
            s = nxt
        out.append(s)
    return out


def random_batch(game, n, rng):
    """(x, pi, z, mask) for ``n`` random states with random legal policy targets."""
    from gametransfer import codec

    sspec, aspec = codec.build_state_spec(game), codec.build_action_spec(game)
    states = random_states(game, n, rng)
    x = np.stack([codec.encode_state(s, sspec) for s in states])
    masks, pis = [], []
    for s in states:
        m = codec.legal_mask(codec.alias_groups(s.legal, aspec), aspec)
        p = np.where(m, rng.random(m.shape), 0.0)
        masks.append(m)
        pis.append(p / p.sum())
    z = rng.choice([-1.0, 0.0, 1.0], size=n)
    return x, np.stack(pis), z, np.stack(masks)
