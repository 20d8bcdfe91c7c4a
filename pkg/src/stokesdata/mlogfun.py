"""The multilogarithm families M_n, L_n, Q_n and the chain formula for Q_n.

Tuples ``z_1..z_n`` have partial sums ``s_i``.  ``M_n`` integrates the forms
``dt/(t - s_i)`` along the segment from 0 to ``s_n``, bypassing the partial
sums that fall on it by small clockwise half-circles.  ``L_n`` corrects
``M_n`` on the cut lines so that it yields Lie series.  ``Q_n`` uses the
multiplier contour running out along ``-r`` and back along ``s_n - r``.

Rays are given by their angle in units of pi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

from .complexpath import (
    CLOCKWISE,
    ON_LINE_RTOL,
    IteratedIntegralSpec,
    build_detour_segment,
    build_multiplier_contour,
    iterated_integral,
)
from .errors import NonGeneric

TWO_PI_I = 2j * math.pi

# near-threshold band: decisions closer than this to a boundary are refused
GUARD = 1e-8
ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class ZTuple:
    entries: tuple

    def __post_init__(self):
        entries = tuple(complex(z) for z in self.entries)
        if not entries:
            raise ValueError("empty tuple")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def scale(self) -> float:
        return max(abs(z) for z in self.entries)

    @property
    def partial_sums(self) -> tuple:
        out, s = [], 0j
        for z in self.entries:
            s += z
            out.append(s)
        return tuple(out)

    @property
    def total(self) -> complex:
        return self.partial_sums[-1]

    def has_zero_entry(self) -> bool:
        return any(is_zero(z, self.scale) for z in self.entries)

    def zero_sum(self) -> bool:
        return is_zero(self.total, self.scale)

    @property
    def interior_collision(self) -> bool:
        s = self.partial_sums
        tol = ON_LINE_RTOL * self.scale
        return any(abs(x) <= tol or abs(x - s[-1]) <= tol for x in s[:-1])

    @property
    def ray_aligned(self) -> bool:
        z = self.entries
        return any(_same_direction(a, b) for a, b in zip(z, z[1:]))


TupleLike = Union[ZTuple, Sequence[complex]]


def as_ztuple(t: TupleLike) -> ZTuple:
    return t if isinstance(t, ZTuple) else ZTuple(tuple(t))


def is_zero(x: complex, scale: float) -> bool:
    return abs(x) <= ZERO_RTOL * max(scale, 1e-300)


def _same_direction(a: complex, b: complex) -> bool:
    if a == 0 or b == 0:
        return False
    return abs(cmath.phase(a / b)) <= ON_LINE_RTOL


def on_ray(x: complex, direction: complex, scale: float) -> bool:
    """Whether ``x`` lies on the open ray through ``direction``.

    Raises NonGeneric inside the guard band around the decision boundary.
    """
    if is_zero(x, scale):
        return False
    ang = abs(cmath.phase(x / direction))
    if ang <= ON_LINE_RTOL:
        return True
    if ang <= GUARD:
        raise NonGeneric(f"{x} is within {ang:.1e} rad of the ray through {direction}")
    return False


def _key(zs: Iterable[complex]) -> tuple:
    # memo key: rounding to 14 significant digits merges sums that differ by rounding noise
    return tuple(complex(float(f"{z.real:.14g}"), float(f"{z.imag:.14g}")) for z in zs)


def _check_near_path(poles, start, end, scale):
    """Refuse poles that sit just off the segment (between 'on' and clearly off)."""
    d = end - start
    for p in poles:
        w = (p - start) / d
        if -GUARD < w.real < 1 + GUARD and ON_LINE_RTOL < abs(w.imag) <= GUARD:
            raise NonGeneric(f"partial sum {p} is within the guard band of the segment")


def _snap(points, targets, scale):
    out = []
    for p in points:
        for q in targets:
            if abs(p - q) <= ON_LINE_RTOL * scale:
                p = q
                break
        out.append(p)
    return out


# ---------------------------------------------------------------------------
# M_n


def eval_M(t: TupleLike, tol: float = 1e-12, radius: float | None = None, orientation: str = CLOCKWISE) -> complex:
    t = as_ztuple(t)
    if t.n == 1:
        return TWO_PI_I
    if radius is not None:
        return _M_uncached(t.entries, tol, radius, orientation)
    return _M_cached(_key(t.entries), tol, orientation)


@lru_cache(maxsize=1 << 16)
def _M_cached(zs: tuple, tol: float, orientation: str) -> complex:
    return _M_uncached(zs, tol, None, orientation)


def _M_uncached(zs, tol, radius, orientation) -> complex:
    t = ZTuple(zs)
    scale = t.scale
    if t.has_zero_entry():
        raise NonGeneric("entries must be non-zero")
    s = t.partial_sums
    end = s[-1]
    if is_zero(end, scale):
        return 0j
    poles = _snap(s[:-1], (0j, end), scale)
    _check_near_path(poles, 0j, end, scale)
    path = build_detour_segment(0j, end, poles, orientation, radius)
    return TWO_PI_I * iterated_integral(path, IteratedIntegralSpec(tuple(poles)), tol)


# ---------------------------------------------------------------------------
# L_n


def _ray_chains(sums: Sequence[complex], admissible):
    """Yield cut lists 0 = i_0 < ... < i_k = n whose consecutive blocks pass ``admissible``."""
    n = len(sums) - 1

    def rec(i, cuts):
        if i == n:
            yield cuts
            return
        for j in range(i + 1, n + 1):
            if admissible(i, j):
                yield from rec(j, cuts + (j,))

    yield from rec(0, (0,))


def eval_L(t: TupleLike, tol: float = 1e-12, orientation: str = CLOCKWISE) -> complex:
    """Sum over ray chains of (-1)^(k-1)/k times products of M over the blocks.

    ``orientation`` is passed on to the M factors.
    """
    t = as_ztuple(t)
    if t.n == 1:
        return TWO_PI_I
    return _L_cached(_key(t.entries), tol, orientation)


@lru_cache(maxsize=1 << 16)
def _L_cached(zs: tuple, tol: float, orientation: str) -> complex:
    t = ZTuple(zs)
    scale = t.scale
    if t.has_zero_entry():
        raise NonGeneric("entries must be non-zero")
    end = t.total
    if is_zero(end, scale):
        return 0j
    sums = (0j,) + t.partial_sums

    def admissible(i, j):
        return on_ray(sums[j] - sums[i], end, scale)

    total = 0j
    for cuts in _ray_chains(sums, admissible):
        k = len(cuts) - 1
        term = (-1) ** (k - 1) / k
        for a, b in zip(cuts, cuts[1:]):
            term *= eval_M(zs[a:b], tol, orientation=orientation)
        total += term
    return total


# ---------------------------------------------------------------------------
# Q_n and its chain formula


def _unit(phi: float) -> complex:
    return cmath.exp(1j * math.pi * phi)


def left_side(x: complex, phi: float, scale: float) -> int:
    """+1 if ``x`` lies in the open half-plane left of the ray, -1 if right, 0 if on the line."""
    v = (x / _unit(phi)).imag
    if abs(v) <= ON_LINE_RTOL * scale:
        return 0
    if abs(v) <= GUARD * scale:
        raise NonGeneric(f"{x} is within the guard band of the line through the ray")
    return 1 if v > 0 else -1


def phase(x: complex, theta: float) -> float:
    """arg(x)/pi taken in [theta, theta + 2)."""
    return theta + ((cmath.phase(x) - math.pi * theta) % (2 * math.pi)) / math.pi


def _oriented_phi(t: ZTuple, phi: float):
    """Ray angle for which s_n lies to its left, or None when s_n is on the line."""
    side = left_side(t.total, phi, t.scale)
    if side == 0:
        return None
    return phi if side > 0 else phi + 1.0


def eval_Q(t: TupleLike, phi: float, tol: float = 1e-12, big_radius: float | None = None) -> complex:
    t = as_ztuple(t)
    if t.n == 1:
        return TWO_PI_I
    if t.has_zero_entry():
        raise NonGeneric("entries must be non-zero")
    if t.zero_sum():
        return 0j
    oriented = _oriented_phi(t, phi)
    if oriented is None:
        raise NonGeneric("s_n lies on the line of the ray")
    if big_radius is not None:
        return _Q_uncached(t.entries, oriented, tol, big_radius)
    return _Q_cached(_key(t.entries), oriented, tol)


@lru_cache(maxsize=1 << 16)
def _Q_cached(zs, phi, tol):
    return _Q_uncached(zs, phi, tol, None)


def _Q_uncached(zs, phi, tol, big_radius):
    t = ZTuple(zs)
    s = t.partial_sums
    end = s[-1]
    poles = _snap(s[:-1], (0j, end), t.scale)
    path = build_multiplier_contour(phi, end, poles, big_radius=big_radius)
    return TWO_PI_I * iterated_integral(path, IteratedIntegralSpec(tuple(poles)), tol)


def in_closed_left_half_plane(x: complex, phi: float, scale: float) -> bool:
    """Membership of the semi-closed half-plane: open left side plus the ray -r."""
    if is_zero(x, scale):
        return False
    side = left_side(x, phi, scale)
    if side > 0:
        return True
    if side < 0:
        return False
    return (x / _unit(phi)).real < 0


def eval_Qtilde(t: TupleLike, phi: float, tol: float = 1e-12, alternating: bool = False) -> complex:
    """Phase-ordered chain sum of products of M-factors.

    With ``alternating`` a chain of k blocks carries the sign (-1)^(k-1); that
    variant is what the contour integral :func:`eval_Q` reproduces.
    """
    t = as_ztuple(t)
    if t.n == 1:
        return TWO_PI_I
    if t.has_zero_entry():
        raise NonGeneric("entries must be non-zero")
    if t.zero_sum():
        return 0j
    oriented = _oriented_phi(t, phi)
    if oriented is None:
        raise NonGeneric("s_n lies on the line of the ray")
    zs = t.entries
    scale = t.scale
    sums = (0j,) + t.partial_sums
    n = t.n

    def rec(i, last_phase):
        if i == n:
            return 1.0 + 0j
        acc = 0j
        for j in range(i + 1, n + 1):
            block = sums[j] - sums[i]
            if not in_closed_left_half_plane(block, oriented, scale):
                continue
            ph = phase(block, oriented)
            if last_phase is not None:
                gap = last_phase - ph
                if abs(gap) <= ON_LINE_RTOL:
                    continue
                if abs(gap) <= GUARD:
                    raise NonGeneric("near-tie between block phases")
                if gap < 0:
                    continue
            acc += sign * eval_M(zs[i:j], tol) * rec(j, ph)
        return acc

    sign = -1.0 if alternating else 1.0
    return sign * rec(0, None)
