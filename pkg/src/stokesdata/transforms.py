"""Transforms: families F_n of functions of n complex variables.

Composition substitutes block sums into the outer transform:

    (G o F)_n(z) = sum over 0 = i_0 < ... < i_k = n of
                   G_k(block sums) * prod_j F_{block j}(block j)

A transform with F_1 = 1 is inverted by a signed sum over plane trees; a
general invertible transform by solving (G o F)_n = 0 degree by degree.
Values off (C*)^n are taken to be zero.
"""

from __future__ import annotations

import math
import threading
from itertools import permutations
from typing import Callable, Dict, Sequence

import numpy as np

from .complexpath import CLOCKWISE
from .errors import NotInvertible, NotUnit
from .mlogfun import TWO_PI_I, ZTuple, _key, eval_L, eval_M, eval_Qtilde, is_zero
from .trees import enumerate_trees, tree_weight


class Transform:
    """A coefficient family evaluated on tuples of complex numbers."""

    def __init__(self, evaluator: Callable[[tuple], complex], name: str = "F", zero_sum_vanishing: bool = False):
        self._evaluator = evaluator
        self.name = name
        self.zero_sum_vanishing = zero_sum_vanishing
        self._cache: Dict[tuple, complex] = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"Transform({self.name})"

    def __call__(self, zs: Sequence[complex]) -> complex:
        zs = tuple(complex(z) for z in zs)
        t = ZTuple(zs)
        if t.has_zero_entry():
            return 0j
        if self.zero_sum_vanishing and t.n >= 2 and t.zero_sum():
            return 0j
        key = _key(zs)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = complex(self._evaluator(zs))
        with self._lock:
            self._cache[key] = value
        return value

    def eval(self, n: int, zs: Sequence[complex]) -> complex:
        if len(zs) != n:
            raise ValueError("tuple length does not match n")
        return self(zs)

    def scaled(self, c: complex, name: str | None = None) -> "Transform":
        """The transform c * F (every component scaled)."""
        return Transform(lambda zs: c * self(zs), name or f"{c}*{self.name}", self.zero_sum_vanishing)


def _identity(zs):
    return 1.0 + 0j if len(zs) == 1 else 0j


IDENTITY = Transform(_identity, "id", zero_sum_vanishing=True)


def constant_unit(c: complex) -> Transform:
    """c times the identity transform."""
    return Transform(lambda zs: complex(c) if len(zs) == 1 else 0j, f"{c}*id", True)


def compositions(n: int):
    """Cut lists (0, i_1, ..., n) for every composition of n."""
    for mask in range(1 << (n - 1)):
        cuts = [0] + [i + 1 for i in range(n - 1) if mask >> i & 1] + [n]
        yield tuple(cuts)


def _block_sums(zs, cuts):
    return tuple(sum(zs[a:b], 0j) for a, b in zip(cuts, cuts[1:]))


def compose(G: Transform, F: Transform) -> Transform:
    def evaluator(zs):
        total = 0j
        for cuts in compositions(len(zs)):
            inner = 1.0 + 0j
            for a, b in zip(cuts, cuts[1:]):
                inner *= F(zs[a:b])
                if inner == 0:
                    break
            if inner == 0:
                continue
            total += G(_block_sums(zs, cuts)) * inner
        return total

    return Transform(evaluator, f"({G.name} o {F.name})", G.zero_sum_vanishing and F.zero_sum_vanishing)


def _probe_points(count: int = 16, seed: int = 12345):
    rng = np.random.default_rng(seed)
    return [complex(a, b) for a, b in rng.normal(size=(count, 2))]


def invert_unit(F: Transform) -> Transform:
    """Inverse of a transform with F_1 = 1 via the plane-tree formula."""
    for z in _probe_points():
        if abs(F((z,)) - 1) > 1e-12:
            raise NotUnit(f"{F.name}_1({z}) = {F((z,))} is not 1")

    def evaluator(zs):
        n = len(zs)
        if n == 1:
            return 1.0 + 0j
        return sum((-1) ** T.vertex_count * tree_weight(T, F, zs) for T in enumerate_trees(n))

    return Transform(evaluator, f"{F.name}^-1", F.zero_sum_vanishing)


def invert(F: Transform) -> Transform:
    """Inverse by the degree-by-degree solver of (G o F)_n = id_n."""
    for z in _probe_points():
        if abs(F((z,))) < 1e-300:
            raise NotInvertible(f"{F.name}_1 vanishes at {z}")

    G: Transform

    def evaluator(zs):
        n = len(zs)
        if n == 1:
            return 1.0 / F(zs)
        diagonal = 1.0 + 0j
        for z in zs:
            diagonal *= F((z,))
        rest = 0j
        for cuts in compositions(n):
            if len(cuts) - 1 == n:
                continue  # the unknown term
            inner = 1.0 + 0j
            for a, b in zip(cuts, cuts[1:]):
                inner *= F(zs[a:b])
                if inner == 0:
                    break
            if inner == 0:
                continue
            rest += G(_block_sums(zs, cuts)) * inner
        return -rest / diagonal

    G = Transform(evaluator, f"{F.name}^-1", F.zero_sum_vanishing)
    return G


# ---------------------------------------------------------------------------
# the canonical transforms


def make_M(tol: float = 1e-12, orientation: str = CLOCKWISE) -> Transform:
    return Transform(lambda zs: eval_M(zs, tol, orientation=orientation), "M", zero_sum_vanishing=True)


def make_L(tol: float = 1e-12, orientation: str = CLOCKWISE) -> Transform:
    return Transform(lambda zs: eval_L(zs, tol, orientation), "L", zero_sum_vanishing=True)


def make_Qtilde(phi: float, tol: float = 1e-12) -> Transform:
    return Transform(lambda zs: eval_Qtilde(zs, phi, tol), "Qtilde")


def make_J(tol: float = 1e-12, method: str = "auto", tree_limit: int = 5, orientation: str = CLOCKWISE) -> Transform:
    """Coefficients of the inverse Stokes map: the compositional inverse of L.

    ``tree``: J_n = (2 pi i)^-n * sum_T (-1)^|V(T)| prod_v L_v / (2 pi i).
    ``inductive``: solve (J o L)_n = 0 degree by degree.
    ``auto`` uses the tree formula up to ``tree_limit`` leaves.
    ``orientation`` selects the detours of the underlying M factors.
    """
    L = make_L(tol, orientation)
    unit_L = Transform(lambda zs: L(zs) / TWO_PI_I, "L/2pii", True)
    tree_inverse = invert_unit(unit_L) if method in ("tree", "auto") else None
    inductive = invert(L) if method in ("inductive", "auto") else None

    def evaluator(zs):
        n = len(zs)
        if method == "tree" or (method == "auto" and n <= tree_limit):
            return tree_inverse(zs) / TWO_PI_I**n
        return inductive(zs)

    return Transform(evaluator, "J", zero_sum_vanishing=True)


# ---------------------------------------------------------------------------
# Lie test in the free associative algebra


def _bracket_left_normed(word: tuple) -> Dict[tuple, int]:
    """Expand [[x_a, x_b], ..., x_c] into a linear combination of words."""
    poly: Dict[tuple, int] = {word[:1]: 1}
    for letter in word[1:]:
        nxt: Dict[tuple, int] = {}
        for w, c in poly.items():
            nxt[w + (letter,)] = nxt.get(w + (letter,), 0) + c
            nxt[(letter,) + w] = nxt.get((letter,) + w, 0) - c
        poly = nxt
    return poly


def dynkin(poly: Dict[tuple, complex]) -> Dict[tuple, complex]:
    out: Dict[tuple, complex] = {}
    for word, c in poly.items():
        for w, k in _bracket_left_normed(word).items():
            out[w] = out.get(w, 0) + k * c
    return out


def symmetrized_polynomial(F: Callable[[tuple], complex], zs: Sequence[complex]) -> Dict[tuple, complex]:
    """sum over permutations s of F(z_s) x_s(1) ... x_s(n)."""
    zs = tuple(complex(z) for z in zs)
    n = len(zs)
    return {perm: F(tuple(zs[i] for i in perm)) for perm in permutations(range(n))}


def is_lie(poly: Dict[tuple, complex], degree: int, tol: float) -> bool:
    """Dynkin-Specht-Wever test: a homogeneous P of degree n is Lie iff D(P) = n P."""
    image = dynkin(poly)
    words = set(image) | set(poly)
    scale = max([1.0] + [abs(c) for c in poly.values()])
    bound = math.factorial(degree) * 10 * tol * scale
    return all(abs(image.get(w, 0) - degree * poly.get(w, 0)) <= bound for w in words)


def lie_transform_check(F: Callable[[tuple], complex], n: int, zs: Sequence[complex], tol: float = 1e-12) -> bool:
    if n > 6:
        raise ValueError("the symmetrized check is limited to n <= 6")
    if len(zs) != n:
        raise ValueError("tuple length does not match n")
    return is_lie(symmetrized_polynomial(F, zs), n, tol)
