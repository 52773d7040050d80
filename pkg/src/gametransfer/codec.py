"""State and move tensor encodings with explicit per-channel semantics.

A :class:`StateTensorSpec` / :class:`ActionTensorSpec` is an ordered list of
channel descriptors. Encoders look channels up by *meaning*, never by
position, so any permutation of a spec is a valid encoding of the same game.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from gametransfer.games import GameConfig, GameState
from gametransfer.geometry import P1, P2, PLAYERS, MoveRecord
from gametransfer.transfer.trees import RuleTree, build_rule_tree

STATE_KINDS = (
    "piecePresence", "containerExists", "isCurrentPlayer", "swappedRoles",
    "lastMoveFrom", "lastMoveTo", "secondLastMoveFrom", "secondLastMoveTo",
    "stackHeight", "pieceCount", "playerAmount", "localState",
)
MOVE_POSITION_KINDS = ("lastMoveFrom", "lastMoveTo", "secondLastMoveFrom", "secondLastMoveTo")
BUCKETS = tuple(range(-3, 4))  # -3 stands for "<= -3", 3 for ">= 3"


@dataclass(frozen=True)
class ChannelSemantic:
    kind: str
    player: Optional[int] = None
    piece: Optional[str] = None
    index: Optional[int] = None  # container index
    tree: Optional[RuleTree] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValueError(f"unknown state channel kind {self.kind!r}")

    def __str__(self):
        if self.kind == "piecePresence":
            return f"piecePresence(P{self.player}, {self.piece})"
        if self.kind == "containerExists":
            return f"containerExists({self.index})"
        if self.player is not None:
            return f"{self.kind}(P{self.player})"
        return self.kind


@dataclass(frozen=True)
class ActionChannel:
    kind: str  # placement | movement | pass | swap
    drow: Optional[int] = None
    dcol: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("placement", "movement", "pass", "swap"):
            raise ValueError(f"unknown action channel kind {self.kind!r}")
        if (self.kind == "movement") != (self.drow is not None and self.dcol is not None):
            raise ValueError("movement channels (and only they) carry both buckets")
        if self.kind == "movement" and not (self.drow in BUCKETS and self.dcol in BUCKETS):
            raise ValueError(f"bucket out of range: ({self.drow}, {self.dcol})")

    def __str__(self):
        if self.kind == "movement":
            return f"movement({_bucket_str(self.drow)},{_bucket_str(self.dcol)})"
        return self.kind


def _bucket_str(b):
    return {-3: "<=-3", 3: ">=3"}.get(b, str(b))


def bucket(delta: int) -> int:
    return max(-3, min(3, delta))


def movement_channel_index(drow_bucket: int, dcol_bucket: int) -> int:
    return 7 * (drow_bucket + 3) + (dcol_bucket + 3)


class _Spec:
    channels: tuple
    H: int
    W: int

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        lookup = {}
        for i, ch in enumerate(self.channels):
            if ch in lookup:
                raise ValueError(f"duplicate channel {ch}")
            lookup[ch] = i
        object.__setattr__(self, "_index", lookup)

    def __len__(self):
        return len(self.channels)

    @property
    def shape(self):
        return (len(self.channels), self.H, self.W)

    def index_of(self, channel) -> int:
        return self._index[channel]

    def get(self, channel) -> Optional[int]:
        return self._index.get(channel)

    def permuted(self, order):
        """Same channels reordered: new channel k is old channel ``order[k]``."""
        return type(self)(tuple(self.channels[i] for i in order), self.H, self.W)

    def with_dims(self, H, W):
        return type(self)(self.channels, H, W)


@dataclass(frozen=True)
class StateTensorSpec(_Spec):
    channels: tuple
    H: int
    W: int


@dataclass(frozen=True)
class ActionTensorSpec(_Spec):
    channels: tuple
    H: int
    W: int

    def __post_init__(self):
        super().__post_init__()
        kinds = [c.kind for c in self.channels]
        n_move = kinds.count("movement")
        if kinds.count("placement") > 1 or (n_move and "placement" in kinds):
            raise ValueError("an action spec has either one placement channel or movement channels")
        if n_move not in (0, 49):
            raise ValueError(f"movement specs need all 49 movement channels, got {n_move}")

    @property
    def movement(self) -> bool:
        return any(c.kind == "movement" for c in self.channels)

    @property
    def size(self) -> int:
        return len(self.channels) * self.H * self.W

    def flat_of(self, move) -> int:
        """Memoised ``flat_index(move_to_policy_index(move, self), self)``."""
        cache = self.__dict__.setdefault("_flat_cache", {})
        f = cache.get(move)
        if f is None:
            f = cache[move] = flat_index(move_to_policy_index(move, self), self)
        return f


def build_state_spec(config: GameConfig) -> StateTensorSpec:
    chans = [ChannelSemantic("containerExists", index=0)]
    for p in PLAYERS:
        for t in config.piece_types:
            chans.append(ChannelSemantic("piecePresence", player=p, piece=t,
                                         tree=build_rule_tree(config, t)))
    chans += [ChannelSemantic("isCurrentPlayer", player=P1),
              ChannelSemantic("isCurrentPlayer", player=P2)]
    chans += [ChannelSemantic(k) for k in MOVE_POSITION_KINDS]
    if config.swap_rule:
        chans.append(ChannelSemantic("swappedRoles"))
    g = config.geometry
    return StateTensorSpec(tuple(chans), g.H, g.W)


def build_action_spec(config: GameConfig) -> ActionTensorSpec:
    if config.movement:
        chans = [ActionChannel("movement", dr, dc) for dr in BUCKETS for dc in BUCKETS]
    else:
        chans = [ActionChannel("placement")]
    chans += [ActionChannel("pass"), ActionChannel("swap")]
    g = config.geometry
    return ActionTensorSpec(tuple(chans), g.H, g.W)


def encode_state(state: GameState, spec: StateTensorSpec, out: Optional[np.ndarray] = None):
    """Binary (C, H, W) float64 encoding of ``state`` laid out per ``spec``.

    Channel kinds the game never produces (stack height, local state, ...)
    are left at zero.
    """
    g = state.config.geometry
    if (spec.H, spec.W) != (g.H, g.W):
        raise ValueError(f"spec dims {(spec.H, spec.W)} do not match board {(g.H, g.W)}")
    x = np.zeros(spec.shape) if out is None else out
    hist = state.history
    last = hist[-1] if hist else None
    second = hist[-2] if len(hist) > 1 else None
    pieces = state.config.piece_types
    for i, ch in enumerate(spec.channels):
        k = ch.kind
        if k == "piecePresence":
            if ch.piece == pieces[0]:
                x[i] = state.board == ch.player
        elif k == "containerExists":
            if ch.index == 0:
                x[i] = g.playable
        elif k == "isCurrentPlayer":
            if state.to_move == ch.player:
                x[i] = 1.0
        elif k == "swappedRoles":
            if state.swapped:
                x[i] = 1.0
        elif k in MOVE_POSITION_KINDS:
            mv = last if k.startswith("last") else second
            cell = None if mv is None else (mv.src if k.endswith("From") else mv.dst)
            if cell is not None:
                x[i, cell.row, cell.col] = 1.0
    return x


def move_to_policy_index(move: MoveRecord, spec: ActionTensorSpec) -> tuple[int, int, int]:
    if move.kind in ("pass", "swap"):
        ch = ActionChannel(move.kind)
    elif move.kind == "placement":
        ch = ActionChannel("placement")
    else:
        ch = ActionChannel("movement", bucket(move.dst.row - move.src.row),
                           bucket(move.dst.col - move.src.col))
    c = spec.get(ch)
    if c is None:
        raise ValueError(f"{move} has no {ch} channel in this action spec")
    if move.kind in ("pass", "swap"):
        return (c, 0, 0)
    return (c, move.dst.row, move.dst.col)


def flat_index(index, spec: ActionTensorSpec) -> int:
    c, y, x = index
    return (c * spec.H + y) * spec.W + x


@dataclass(frozen=True)
class AliasGroup:
    policy_index: tuple
    moves: tuple


def alias_groups(legal, spec: ActionTensorSpec) -> list[AliasGroup]:
    """Partition moves by shared policy cell, in first-appearance order."""
    if not legal:
        raise ValueError("alias_groups needs at least one move")
    buckets: dict = {}
    for mv in legal:
        buckets.setdefault(move_to_policy_index(mv, spec), []).append(mv)
    return [AliasGroup(idx, tuple(mvs)) for idx, mvs in buckets.items()]


def moves_at(index, legal, spec: ActionTensorSpec) -> list[MoveRecord]:
    """Inverse of :func:`move_to_policy_index` restricted to ``legal``."""
    index = tuple(index)
    return [mv for mv in legal if move_to_policy_index(mv, spec) == index]


def legal_mask(groups, spec: ActionTensorSpec) -> np.ndarray:
    mask = np.zeros(spec.shape, dtype=bool)
    for g in groups:
        mask[g.policy_index] = True
    return mask


def policy_target_from_visits(visits: dict, spec: ActionTensorSpec) -> np.ndarray:
    """Normalised visit distribution; aliased moves pool into one cell."""
    total = sum(visits.values())
    if total <= 0:
        raise ValueError("policy target needs a positive total visit count")
    target = np.zeros(spec.shape)
    for mv, n in visits.items():
        target[move_to_policy_index(mv, spec)] += n
    return target / total
