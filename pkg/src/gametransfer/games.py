"""Rule implementations: Hex (incl. misere), line-completion games, Breakthrough.

All three families share one immutable :class:`GameState`; the family in the
:class:`GameConfig` selects the move generator and terminal test.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from gametransfer.geometry import (
    DRAW, ONGOING, P1, P2, Cell, GameOutcome, Geometry, MoveRecord,
    make_geometry, opponent, win,
)

FAMILIES = ("hex", "line", "breakthrough")
PIECE_TYPES = {"hex": ("Disc",), "line": ("Disc",), "breakthrough": ("Pawn",)}


class IllegalMoveError(ValueError):
    pass


@dataclass(frozen=True)
class GameConfig:
    family: str
    geometry: Geometry
    misere: bool = False
    win_len: int = 0
    loss_len: Optional[int] = None
    diagonal_only: bool = False
    swap_rule: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown game family {self.family!r}; expected one of {FAMILIES}")
        g = self.geometry
        if self.family == "hex":
            if g.shape != "rhombus":
                raise ValueError("hex is played on a rhombus board")
        elif self.misere:
            raise ValueError("misere is only defined for hex")
        if self.family == "line":
            if self.win_len < 1:
                raise ValueError("line games need win_len >= 1")
            if self.loss_len is not None and not 1 <= self.loss_len < self.win_len:
                raise ValueError(f"loss_len ({self.loss_len}) must be < win_len ({self.win_len})")
        elif self.loss_len is not None or self.diagonal_only:
            raise ValueError("loss_len / diagonal_only only apply to line games")
        if self.family == "breakthrough":
            if g.shape != "square" or g.side < 4:
                raise ValueError("breakthrough needs a square board with side >= 4")
            if self.swap_rule:
                raise ValueError("swap rule is only available in placement games")

    @property
    def movement(self) -> bool:
        return self.family == "breakthrough"

    @property
    def piece_types(self) -> tuple[str, ...]:
        return PIECE_TYPES[self.family]

    @property
    def label(self) -> str:
        g = self.geometry
        size = f"{g.side}x{g.side}" if g.shape != "hexhex" else f"hex{g.side}"
        parts = [self.family, size]
        if self.family == "line":
            parts.append(f"w{self.win_len}")
            if self.loss_len:
                parts.append(f"l{self.loss_len}")
            if self.diagonal_only:
                parts.append("diag")
        if self.misere:
            parts.append("misere")
        if self.swap_rule:
            parts.append("swap")
        return "-".join(parts)

    def to_dict(self) -> dict:
        d = {"family": self.family, "shape": self.geometry.shape, "side": self.geometry.side}
        if self.family == "hex":
            d["misere"] = self.misere
        if self.family == "line":
            d.update(win_len=self.win_len, loss_len=self.loss_len,
                     diagonal_only=self.diagonal_only)
        if self.family != "breakthrough":
            d["swap_rule"] = self.swap_rule
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GameConfig":
        allowed = {"family", "shape", "side", "misere", "win_len", "loss_len",
                   "diagonal_only", "swap_rule"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown game field(s): {sorted(unknown)}")
        for key in ("family", "side"):
            if key not in d:
                raise ValueError(f"missing required game field {key!r}")
        family = d["family"]
        default_shape = {"hex": "rhombus", "breakthrough": "square"}.get(family, "square")
        geometry = make_geometry(d.get("shape", default_shape), d["side"])
        return cls(family, geometry,
                   misere=bool(d.get("misere", False)),
                   win_len=int(d.get("win_len", 0)),
                   loss_len=d.get("loss_len"),
                   diagonal_only=bool(d.get("diagonal_only", False)),
                   swap_rule=bool(d.get("swap_rule", False)))


def hex_game(side: int, misere: bool = False, swap_rule: bool = False) -> GameConfig:
    return GameConfig("hex", make_geometry("rhombus", side), misere=misere, swap_rule=swap_rule)


def line_game(shape: str, side: int, win_len: int, loss_len: Optional[int] = None,
              diagonal_only: bool = False, swap_rule: bool = False) -> GameConfig:
    return GameConfig("line", make_geometry(shape, side), win_len=win_len, loss_len=loss_len,
                      diagonal_only=diagonal_only, swap_rule=swap_rule)


def breakthrough(side: int) -> GameConfig:
    return GameConfig("breakthrough", make_geometry("square", side))


@dataclass(frozen=True, eq=False)
class GameState:
    config: GameConfig
    board: np.ndarray = field(repr=False)  # (H, W) int8: 0 empty, else owner
    to_move: int = P1
    swapped: bool = False
    history: tuple = ()  # up to two most recent MoveRecords, oldest first
    ply: int = 0
    outcome: GameOutcome = ONGOING

    def __eq__(self, other):
        return (isinstance(other, GameState)
                and self.config == other.config
                and np.array_equal(self.board, other.board)
                and (self.to_move, self.swapped, self.history, self.ply, self.outcome)
                == (other.to_move, other.swapped, other.history, other.ply, other.outcome))

    def __hash__(self):
        return hash((self.board.tobytes(), self.to_move, self.swapped, self.history, self.ply))

    @property
    def terminal(self) -> bool:
        return self.outcome.terminal

    @cached_property
    def legal(self) -> tuple[MoveRecord, ...]:
        return tuple(_generate_moves(self))

    def owner(self, cell: Cell) -> int:
        return int(self.board[cell.row, cell.col])

    def render(self) -> str:
        g = self.config.geometry
        sym = {0: ".", 1: "X", 2: "O"}
        rows = []
        for r in range(g.H):
            rows.append("".join(sym[int(self.board[r, c])] if g.playable[r, c] else " "
                                for c in range(g.W)))
        return "\n".join(rows)


def home_ranks(side: int) -> int:
    """Two ranks of pawns each, or one when two would leave no empty row between armies."""
    return 2 if side >= 5 else 1


def initial_state(config: GameConfig) -> GameState:
    g = config.geometry
    board = np.zeros((g.H, g.W), dtype=np.int8)
    if config.family == "breakthrough":
        ranks = home_ranks(g.side)
        board[:ranks, :] = P1
        board[-ranks:, :] = P2
    board.setflags(write=False)
    return GameState(config, board)


def legal_moves(state: GameState) -> list[MoveRecord]:
    if state.terminal:
        raise ValueError("no legal moves in a terminal state")
    return list(state.legal)


def outcome(state: GameState) -> GameOutcome:
    return state.outcome


def _generate_moves(state: GameState) -> list[MoveRecord]:
    if state.terminal:
        return []
    cfg, p = state.config, state.to_move
    if cfg.family == "breakthrough":
        moves = _breakthrough_moves(state)
    else:
        empty = np.argwhere((state.board == 0) & cfg.geometry.playable)
        moves = [MoveRecord("placement", p, dst=Cell(int(r), int(c))) for r, c in empty]
        if cfg.swap_rule and state.ply == 1 and not state.swapped:
            moves.append(MoveRecord("swap", p))
    # None of the implemented families can run out of moves before the game ends.
    assert moves, f"empty move list in non-terminal state:\n{state.render()}"
    return moves


def _breakthrough_moves(state: GameState) -> list[MoveRecord]:
    board, p = state.board, state.to_move
    n = state.config.geometry.side
    fwd = 1 if p == P1 else -1
    enemy = opponent(p)
    moves = []
    for r, c in np.argwhere(board == p):
        r, c = int(r), int(c)
        r2 = r + fwd
        if not 0 <= r2 < n:
            continue
        for dc in (-1, 0, 1):
            c2 = c + dc
            if not 0 <= c2 < n:
                continue
            target = board[r2, c2]
            if target == 0 or (dc != 0 and target == enemy):
                moves.append(MoveRecord("movement", p, src=Cell(r, c), dst=Cell(r2, c2)))
    return moves


def apply_move(state: GameState, move: MoveRecord) -> GameState:
    if state.terminal:
        raise IllegalMoveError("game is already over")
    if move not in state.legal:
        raise IllegalMoveError(f"illegal move {move} at ply {state.ply} "
                               f"(P{state.to_move} to move)\n{state.render()}")
    cfg, p = state.config, state.to_move
    board = state.board.copy()
    swapped = state.swapped
    if move.kind == "placement":
        board[move.dst.row, move.dst.col] = p
    elif move.kind == "movement":
        board[move.src.row, move.src.col] = 0
        board[move.dst.row, move.dst.col] = p
    elif move.kind == "swap":
        board[board == opponent(p)] = p
        swapped = True
    board.setflags(write=False)
    history = (state.history + (move,))[-2:]
    nxt = GameState(cfg, board, opponent(p), swapped, history, state.ply + 1)
    result = _terminal_test(nxt, move)
    if result is not ONGOING:
        object.__setattr__(nxt, "outcome", result)
    return nxt


def replay(config: GameConfig, moves) -> GameState:
    state = initial_state(config)
    for m in moves:
        state = apply_move(state, m)
    return state


def _terminal_test(state: GameState, last: MoveRecord) -> GameOutcome:
    cfg = state.config
    mover = last.player
    if cfg.family == "hex":
        if last.kind == "pass":
            return ONGOING
        cell = last.dst if last.dst is not None else _single_stone(state)
        owner = state.owner(cell)
        if _hex_connects(state, cell, owner):
            return win(opponent(owner) if cfg.misere else owner)
        return ONGOING
    if cfg.family == "line":
        if last.kind == "placement":
            lengths = [_run_length(state, last.dst, d, mover)
                       for d in (cfg.geometry.diagonal_axes if cfg.diagonal_only
                                 else cfg.geometry.axes)]
            if max(lengths) >= cfg.win_len:
                return win(mover)
            if cfg.loss_len is not None and cfg.loss_len in lengths:
                return win(opponent(mover))
        if not ((state.board == 0) & cfg.geometry.playable).any():
            return DRAW
        return ONGOING
    # breakthrough
    n = cfg.geometry.side
    goal_row = n - 1 if mover == P1 else 0
    if last.kind == "movement" and last.dst.row == goal_row:
        return win(mover)
    if not (state.board == opponent(mover)).any():
        return win(mover)
    return ONGOING


def _single_stone(state: GameState) -> Cell:
    r, c = np.argwhere(state.board != 0)[0]
    return Cell(int(r), int(c))


def _run_length(state: GameState, cell: Cell, direction, player: int) -> int:
    g = state.config.geometry
    board = state.board
    dr, dc = direction
    total = 1
    for sign in (1, -1):
        r, c = cell.row + sign * dr, cell.col + sign * dc
        while g.is_playable(r, c) and board[r, c] == player:
            total += 1
            r += sign * dr
            c += sign * dc
    return total


def _hex_connects(state: GameState, start: Cell, player: int) -> bool:
    """Whether the group containing ``start`` joins ``player``'s two edges.

    P1 joins the top and bottom rows, P2 the left and right columns.
    """
    g = state.config.geometry
    n = g.side
    board = state.board
    seen = {(start.row, start.col)}
    stack = [(start.row, start.col)]
    lo = hi = False
    while stack:
        r, c = stack.pop()
        k = r if player == P1 else c
        lo |= k == 0
        hi |= k == n - 1
        if lo and hi:
            return True
        for dr, dc in g.neighbor_offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < n and 0 <= cc < n and board[rr, cc] == player and (rr, cc) not in seen:
                seen.add((rr, cc))
                stack.append((rr, cc))
    return False
