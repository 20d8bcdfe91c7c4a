"""Rooted plane trees whose internal vertices have at least two children.

These index the terms of the inversion formula for unit transforms.  A tree
with ``n`` leaves reads its leaves left to right as ``z_1..z_n``; each
internal vertex contributes the transform evaluated at the leaf sums of its
child subtrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

MAX_LEAVES = 12


@dataclass(frozen=True)
class PlaneTree:
    children: tuple = ()

    def __post_init__(self):
        if len(self.children) == 1:
            raise ValueError("internal vertices need at least two children")

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def leaf_count(self) -> int:
        if self.is_leaf:
            return 1
        return sum(c.leaf_count for c in self.children)

    @property
    def vertex_count(self) -> int:
        """Number of internal vertices."""
        if self.is_leaf:
            return 0
        return 1 + sum(c.vertex_count for c in self.children)

    def encode(self) -> str:
        if self.is_leaf:
            return "x"
        return "[" + ",".join(c.encode() for c in self.children) + "]"

    def __str__(self) -> str:
        return self.encode()


LEAF = PlaneTree()


def _compositions(n: int, parts: int):
    if parts == 1:
        yield (n,)
        return
    for first in range(1, n - parts + 2):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _enumerate(n: int) -> tuple:
    if n == 1:
        return (LEAF,)
    trees = []
    for k in range(2, n + 1):
        for comp in _compositions(n, k):
            for kids in product(*(_enumerate(m) for m in comp)):
                trees.append(PlaneTree(tuple(kids)))
    return tuple(trees)


def enumerate_trees(n_leaves: int) -> tuple:
    """All plane trees with ``n_leaves`` leaves, ordered by root arity then lexicographically."""
    if n_leaves < 1:
        raise ValueError("need at least one leaf")
    if n_leaves > MAX_LEAVES:
        raise ValueError(f"tree enumeration is capped at {MAX_LEAVES} leaves")
    return _enumerate(n_leaves)


def parse_tree(text: str) -> PlaneTree:
    """Inverse of :meth:`PlaneTree.encode`."""
    pos = 0

    def peek():
        if pos >= len(text):
            raise ValueError("unexpected end of tree text")
        return text[pos]

    def node():
        nonlocal pos
        if peek() == "x":
            pos += 1
            return LEAF
        if peek() != "[":
            raise ValueError(f"unexpected {text[pos]!r} at {pos}")
        pos += 1
        kids = [node()]
        while peek() == ",":
            pos += 1
            kids.append(node())
        if peek() != "]":
            raise ValueError(f"unexpected {text[pos]!r} at {pos}")
        pos += 1
        return PlaneTree(tuple(kids))

    text = text.replace(" ", "")
    tree = node()
    if pos != len(text):
        raise ValueError("trailing characters")
    return tree


def tree_weight(tree: PlaneTree, F: Callable[[tuple], complex], zs: Sequence[complex]) -> complex:
    """Product over internal vertices of ``F`` at the leaf sums of the children."""
    zs = tuple(complex(z) for z in zs)
    if tree.leaf_count != len(zs):
        raise ValueError("leaf count does not match tuple length")

    def walk(t: PlaneTree, offset: int):
        # returns (weight, leaf sum)
        if t.is_leaf:
            return 1.0 + 0j, zs[offset]
        weight = 1.0 + 0j
        sums = []
        for c in t.children:
            w, s = walk(c, offset)
            weight *= w
            sums.append(s)
            offset += c.leaf_count
        return weight * F(tuple(sums)), sum(sums)

    return walk(tree, 0)[0]
