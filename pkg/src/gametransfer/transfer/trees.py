"""Labelled ordered trees and the Zhang-Shasha tree edit distance."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RuleTree:
    label: str
    children: tuple["RuleTree", ...] = ()

    @classmethod
    def build(cls, label, *children):
        return cls(label, tuple(children))

    def size(self) -> int:
        return 1 + sum(ch.size() for ch in self.children)

    def __str__(self):
        if not self.children:
            return self.label
        return f"{self.label}({', '.join(map(str, self.children))})"


def _postorder(tree: RuleTree):
    """Post-order labels and leftmost-leaf indices (0-based)."""
    labels, lml = [], []

    def visit(node):
        first = None
        for ch in node.children:
            leftmost = visit(ch)
            if first is None:
                first = leftmost
        idx = len(labels)
        labels.append(node.label)
        lml.append(idx if first is None else first)
        return lml[idx]

    visit(tree)
    return labels, lml


def _keyroots(lml):
    # A node is a keyroot if no node after it in post-order shares its leftmost leaf.
    last = {}
    for i, l in enumerate(lml):
        last[l] = i
    return sorted(last.values())


def zhang_shasha_distance(a: RuleTree, b: RuleTree) -> int:
    """Unit-cost ordered tree edit distance (insert, delete, rename)."""
    la, lml_a = _postorder(a)
    lb, lml_b = _postorder(b)
    n, m = len(la), len(lb)
    td = [[0] * m for _ in range(n)]
    for i in _keyroots(lml_a):
        for j in _keyroots(lml_b):
            li, lj = lml_a[i], lml_b[j]
            rows, cols = i - li + 2, j - lj + 2
            fd = [[0] * cols for _ in range(rows)]
            for x in range(1, rows):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, cols):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, rows):
                i1 = li + x - 1
                for y in range(1, cols):
                    j1 = lj + y - 1
                    if lml_a[i1] == li and lml_b[j1] == lj:
                        fd[x][y] = min(fd[x - 1][y] + 1,
                                       fd[x][y - 1] + 1,
                                       fd[x - 1][y - 1] + (la[i1] != lb[j1]))
                        td[i1][j1] = fd[x][y]
                    else:
                        p = lml_a[i1] - li
                        q = lml_b[j1] - lj
                        fd[x][y] = min(fd[x - 1][y] + 1,
                                       fd[x][y - 1] + 1,
                                       fd[p][q] + td[i1][j1])
    return td[n - 1][m - 1]


# Piece rule trees stand in for a full rules description: they encode how a
# piece enters or moves on the board, never the end rules (line length etc.).
_PIECE_RULES = {
    ("hex", "Disc"): RuleTree.build("piece", RuleTree.build("place", RuleTree.build("empty"))),
    ("line", "Disc"): RuleTree.build("piece", RuleTree.build("place", RuleTree.build("empty"))),
    ("breakthrough", "Pawn"): RuleTree.build(
        "piece",
        RuleTree.build("step", RuleTree.build("forward"), RuleTree.build("empty")),
        RuleTree.build("step", RuleTree.build("forwardDiagonal"), RuleTree.build("empty")),
        RuleTree.build("capture", RuleTree.build("forwardDiagonal"), RuleTree.build("enemy")),
    ),
}


def build_rule_tree(config, piece_type: str) -> RuleTree:
    try:
        return _PIECE_RULES[(config.family, piece_type)]
    except KeyError:
        raise ValueError(f"{config.family} has no piece type {piece_type!r}") from None
