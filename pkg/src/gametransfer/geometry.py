"""Players, moves, outcomes and board geometry shared by every game.

Three board shapes are supported:

* ``square``  -- an n x n grid with orthogonal adjacency (diagonals are a
  separate direction set used by line games).
* ``rhombus`` -- an n x n grid with six-neighbour hex adjacency, the usual
  layout for the connection game Hex.
* ``hexhex``  -- a hexagon of side n embedded in a (2n-1, 4n-3) grid using
  doubled columns, so horizontal neighbours sit two columns apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

P1 = 1
P2 = 2
PLAYERS = (P1, P2)

SHAPES = ("square", "rhombus", "hexhex")

# Half-axes only: a line along +d is the same line as along -d.
_SQUARE_ORTHO = ((0, 1), (1, 0))
_SQUARE_DIAG = ((1, 1), (1, -1))
_RHOMBUS_AXES = ((0, 1), (1, 0), (1, -1))
_RHOMBUS_DIAG = ((1, 1), (2, -1), (1, -2))
_HEXHEX_AXES = ((0, 2), (1, 1), (1, -1))
_HEXHEX_DIAG = ((2, 0), (1, 3), (1, -3))


def opponent(player: int) -> int:
    if player not in PLAYERS:
        raise ValueError(f"unknown player {player!r}")
    return 3 - player


@dataclass(frozen=True, order=True)
class Cell:
    row: int
    col: int


@dataclass(frozen=True)
class MoveRecord:
    """A single move.

    ``src`` is set only for movement moves, ``dst`` for placement and
    movement moves; pass and swap carry neither.
    """

    kind: str
    player: int
    src: Optional[Cell] = None
    dst: Optional[Cell] = None

    def __post_init__(self):
        if self.kind == "placement":
            ok = self.src is None and self.dst is not None
        elif self.kind == "movement":
            ok = self.src is not None and self.dst is not None
        elif self.kind in ("pass", "swap"):
            ok = self.src is None and self.dst is None
        else:
            raise ValueError(f"unknown move kind {self.kind!r}")
        if not ok:
            raise ValueError(f"malformed {self.kind} move: src={self.src}, dst={self.dst}")
        if self.player not in PLAYERS:
            raise ValueError(f"unknown player {self.player!r}")

    @classmethod
    def place(cls, player, row, col):
        return cls("placement", player, dst=Cell(row, col))

    @classmethod
    def move(cls, player, src, dst):
        return cls("movement", player, src=Cell(*src), dst=Cell(*dst))

    def __str__(self):
        if self.kind == "placement":
            return f"P{self.player}@({self.dst.row},{self.dst.col})"
        if self.kind == "movement":
            return (f"P{self.player}:({self.src.row},{self.src.col})"
                    f"->({self.dst.row},{self.dst.col})")
        return f"P{self.player}:{self.kind}"


@dataclass(frozen=True)
class GameOutcome:
    status: str  # "ongoing" | "win" | "draw"
    winner: Optional[int] = None

    @property
    def terminal(self) -> bool:
        return self.status != "ongoing"

    def value_for(self, player: int) -> float:
        """+1 / -1 / 0 from ``player``'s point of view."""
        if self.status == "win":
            return 1.0 if self.winner == player else -1.0
        return 0.0


ONGOING = GameOutcome("ongoing")
DRAW = GameOutcome("draw")


def win(player: int) -> GameOutcome:
    return GameOutcome("win", player)


@dataclass(frozen=True, eq=False)
class Geometry:
    shape: str
    side: int
    H: int
    W: int
    playable: np.ndarray = field(repr=False)
    neighbor_offsets: tuple = field(repr=False)
    axes: tuple = field(repr=False)
    diagonal_axes: tuple = field(repr=False)

    def __eq__(self, other):
        return (isinstance(other, Geometry)
                and (self.shape, self.side) == (other.shape, other.side))

    def __hash__(self):
        return hash((self.shape, self.side))

    @property
    def n_playable(self) -> int:
        return int(self.playable.sum())

    def cells(self) -> list[Cell]:
        """Playable cells in row-major order."""
        return [Cell(int(r), int(c)) for r, c in zip(*np.nonzero(self.playable))]

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.H and 0 <= col < self.W

    def is_playable(self, row: int, col: int) -> bool:
        return self.in_bounds(row, col) and bool(self.playable[row, col])

    def to_dict(self) -> dict:
        return {"shape": self.shape, "side": self.side}


def make_geometry(shape: str, side: int) -> Geometry:
    if shape not in SHAPES:
        raise ValueError(f"unknown board shape {shape!r}; expected one of {SHAPES}")
    if not isinstance(side, (int, np.integer)) or side < 1:
        raise ValueError(f"board side must be an integer >= 1, got {side!r}")
    side = int(side)
    if shape == "square":
        playable = np.ones((side, side), dtype=bool)
        offsets = ((-1, 0), (1, 0), (0, -1), (0, 1))
        axes, diag = _SQUARE_ORTHO + _SQUARE_DIAG, _SQUARE_DIAG
    elif shape == "rhombus":
        playable = np.ones((side, side), dtype=bool)
        offsets = ((-1, 0), (1, 0), (0, -1), (0, 1), (1, -1), (-1, 1))
        axes, diag = _RHOMBUS_AXES, _RHOMBUS_DIAG
    else:
        H, W = 2 * side - 1, 4 * side - 3
        playable = np.zeros((H, W), dtype=bool)
        for r in range(H):
            shift = abs(r - (side - 1))
            for q in range(H - shift):
                playable[r, 2 * q + shift] = True
        offsets = ((0, -2), (0, 2), (-1, -1), (-1, 1), (1, -1), (1, 1))
        axes, diag = _HEXHEX_AXES, _HEXHEX_DIAG
    playable.setflags(write=False)
    H, W = playable.shape
    return Geometry(shape, side, H, W, playable, offsets, axes, diag)


def neighbors(geometry: Geometry, cell: Cell) -> list[Cell]:
    if not geometry.is_playable(cell.row, cell.col):
        raise ValueError(f"{cell} is not a playable cell of {geometry.shape}({geometry.side})")
    out = []
    for dr, dc in geometry.neighbor_offsets:
        r, c = cell.row + dr, cell.col + dc
        if geometry.is_playable(r, c):
            out.append(Cell(r, c))
    return out


def diagonal_neighbors(geometry: Geometry, cell: Cell) -> list[Cell]:
    out = []
    for dr, dc in geometry.diagonal_axes:
        for sign in (1, -1):
            r, c = cell.row + sign * dr, cell.col + sign * dc
            if geometry.is_playable(r, c):
                out.append(Cell(r, c))
    return out


def line_directions(geometry: Geometry, diagonal_only: bool = False) -> list[tuple[int, int]]:
    return list(geometry.diagonal_axes if diagonal_only else geometry.axes)
