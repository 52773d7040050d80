"""Semantic matching of state and action channels between two domains."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from gametransfer.codec import ActionChannel, ActionTensorSpec, StateTensorSpec
from gametransfer.transfer.trees import zhang_shasha_distance


@dataclass(frozen=True)
class ChannelMapping:
    """``sources[j]`` is the source channel copied into target channel ``j``
    (``None`` when nothing matches)."""

    src_spec: object
    tgt_spec: object
    sources: tuple
    distances: dict = field(default_factory=dict)  # target idx -> tree edit distance used

    def __post_init__(self):
        if len(self.sources) != len(self.tgt_spec):
            raise ValueError("one source assignment per target channel is required")

    def unmatched_targets(self) -> list[int]:
        return [j for j, i in enumerate(self.sources) if i is None]

    def unused_sources(self) -> list[int]:
        used = {i for i in self.sources if i is not None}
        return [i for i in range(len(self.src_spec)) if i not in used]

    def fan_out(self) -> dict:
        """Source channels copied into more than one target channel."""
        counts = Counter(i for i in self.sources if i is not None)
        return {i: n for i, n in counts.items() if n > 1}

    def pairs(self):
        return [(i, j) for j, i in enumerate(self.sources) if i is not None]


def match_state_channels(src: StateTensorSpec, tgt: StateTensorSpec) -> ChannelMapping:
    sources: list[Optional[int]] = []
    distances = {}
    src_containers = [i for i, ch in enumerate(src.channels) if ch.kind == "containerExists"]
    tgt_container_rank = 0
    for j, ch in enumerate(tgt.channels):
        if ch.kind == "containerExists":
            # Containers pair up by order of appearance.
            k = tgt_container_rank
            tgt_container_rank += 1
            sources.append(src_containers[k] if k < len(src_containers) else None)
        elif ch.kind == "piecePresence":
            cands = [(i, c) for i, c in enumerate(src.channels)
                     if c.kind == "piecePresence" and c.player == ch.player]
            exact = [i for i, c in cands if c.piece == ch.piece]
            if exact:
                sources.append(exact[0])
            elif cands:
                if ch.tree is None or any(c.tree is None for _, c in cands):
                    raise ValueError(f"piece channel {ch} cannot be matched without rule trees")
                best = min(cands, key=lambda ic: (zhang_shasha_distance(ic[1].tree, ch.tree), ic[0]))
                distances[j] = zhang_shasha_distance(best[1].tree, ch.tree)
                sources.append(best[0])
            else:
                sources.append(None)
        else:
            sources.append(src.get(ch))
    return ChannelMapping(src, tgt, tuple(sources), distances)


def match_action_channels(src: ActionTensorSpec, tgt: ActionTensorSpec) -> ChannelMapping:
    sources: list[Optional[int]] = []
    src_place = src.get(ActionChannel("placement"))
    src_still = src.get(ActionChannel("movement", 0, 0))
    for ch in tgt.channels:
        if ch.kind in ("pass", "swap"):
            sources.append(src.get(ch))
        elif ch.kind == "placement":
            # A movement source only offers its from == to channel.
            sources.append(src_place if src_place is not None else src_still)
        else:
            # A placement source is equivalent to every movement channel.
            sources.append(src.get(ch) if src.movement else src_place)
    return ChannelMapping(src, tgt, tuple(sources))


def mapping_report(state_map: ChannelMapping, action_map: ChannelMapping,
                   title: str = "") -> str:
    lines = []
    if title:
        lines += [title, ""]
    for label, m in (("State channels", state_map), ("Action channels", action_map)):
        lines.append(f"{label} ({len(m.src_spec)} source -> {len(m.tgt_spec)} target)")
        lines.append(f"  {'target':>4}  {'target channel':<28} {'source':>6}  source channel")
        for j, i in enumerate(m.sources):
            tch = str(m.tgt_spec.channels[j])
            if i is None:
                src_txt = "UNMATCHED"
                lines.append(f"  {j:>4}  {tch:<28} {'-':>6}  {src_txt}")
            else:
                src_txt = str(m.src_spec.channels[i])
                if j in m.distances:
                    src_txt += f"  [tree edit distance {m.distances[j]}]"
                lines.append(f"  {j:>4}  {tch:<28} {i:>6}  {src_txt}")
        unused = m.unused_sources()
        if unused:
            lines.append(f"  dropped source channels: {', '.join(map(str, unused))}")
        fan = m.fan_out()
        if fan:
            lines.append("  one-to-many: " + ", ".join(
                f"source {i} -> {n} targets" for i, n in sorted(fan.items())))
        lines.append("")
    return "\n".join(lines)
