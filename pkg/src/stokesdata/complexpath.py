"""Piecewise contours with pole detours and iterated integrals along them.

A contour is a sequence of straight segments and circular arcs.  Iterated
integrals of the forms ``dz/(z - p_k)`` are computed by integrating the
companion linear system for the vector of partial integrals

    y_0 = 1,    dy_k = y_{k-1} dz / (z - p_k),

with an adaptive Gauss collocation scheme (an implicit Runge-Kutta method of
order 2s).  Because the system is strictly lower triangular the stage
equations are solved by forward substitution.  Local error is controlled by
step doubling.

Conventions: ``nostar`` integrates the first form first (simplex
t_1 <= ... <= t_n); ``star`` integrates it last.  Converting between the
two reverses the pole list.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
from numpy.polynomial import legendre

from .errors import DegeneratePath, PoleOnPath, RadiusTooLarge, RayHitsPole, ToleranceNotMet

CLOCKWISE = "clockwise"
ANTICLOCKWISE = "anticlockwise"
_ORIENTATIONS = (CLOCKWISE, ANTICLOCKWISE)

# relative tolerance for deciding that a point lies on a line
ON_LINE_RTOL = 1e-10
_GAP_TOL = 1e-12


# ---------------------------------------------------------------------------
# path primitives


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, tau):
        return self.start + np.asarray(tau) * (self.end - self.start)

    def velocity(self, tau):
        return np.full(np.shape(tau), self.end - self.start, dtype=complex)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def distance(self, p: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(p - self.start)
        u = ((p - self.start) / d).real
        u = min(1.0, max(0.0, u))
        return abs(p - (self.start + u * d))


@dataclass(frozen=True)
class Arc:
    """Circular arc; angles in radians, ``end_angle - start_angle`` carries the sign."""

    center: complex
    radius: float
    start_angle: float
    end_angle: float
    orientation: str = field(default="")

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("arc radius must be positive")
        sweep = self.end_angle - self.start_angle
        implied = ANTICLOCKWISE if sweep > 0 else CLOCKWISE
        if not self.orientation:
            object.__setattr__(self, "orientation", implied)
        elif self.orientation not in _ORIENTATIONS:
            raise ValueError(f"unknown orientation {self.orientation!r}")
        elif sweep != 0 and self.orientation != implied:
            raise ValueError("arc orientation disagrees with the sign of its sweep")

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.start_angle)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.end_angle)

    @property
    def sweep(self) -> float:
        return self.end_angle - self.start_angle

    def point(self, tau):
        theta = self.start_angle + np.asarray(tau) * self.sweep
        return self.center + self.radius * np.exp(1j * theta)

    def velocity(self, tau):
        theta = self.start_angle + np.asarray(tau) * self.sweep
        return 1j * self.sweep * self.radius * np.exp(1j * theta)

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.end_angle, self.start_angle)

    def distance(self, p: complex) -> float:
        w = p - self.center
        if w != 0:
            lo, hi = sorted((self.start_angle, self.end_angle))
            ang = cmath.phase(w)
            # shift ang into [lo, lo + 2pi)
            ang = lo + (ang - lo) % (2 * math.pi)
            if ang <= hi:
                return abs(abs(w) - self.radius)
        return min(abs(p - self.start), abs(p - self.end))


Piece = Union[Segment, Arc]


@dataclass(frozen=True)
class PathSpec:
    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise DegeneratePath("a path needs at least one piece")
        object.__setattr__(self, "pieces", pieces)
        scale = max(1.0, max(abs(p.start) + abs(p.end) for p in pieces))
        for a, b in zip(pieces, pieces[1:]):
            if abs(a.end - b.start) > _GAP_TOL * scale:
                raise ValueError(f"pieces do not join: {a.end} vs {b.start}")

    @property
    def start(self) -> complex:
        return self.pieces[0].start

    @property
    def end(self) -> complex:
        return self.pieces[-1].end

    @property
    def endpoints(self) -> tuple:
        return (self.start, self.end)

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)

    def reversed(self) -> "PathSpec":
        return PathSpec(tuple(p.reversed() for p in reversed(self.pieces)))

    def __add__(self, other: "PathSpec") -> "PathSpec":
        """Concatenation: ``self`` first, then ``other``."""
        return PathSpec(self.pieces + other.pieces)

    def distance(self, p: complex) -> float:
        return min(piece.distance(p) for piece in self.pieces)

    def trim(self, head: float = 0.0, tail: float = 0.0) -> "PathSpec":
        """Cut length ``head`` off the first piece and ``tail`` off the last (segments only)."""
        pieces = list(self.pieces)
        if head > 0:
            first = pieces[0]
            if not isinstance(first, Segment) or head >= first.length:
                raise ValueError("can only trim inside a leading segment")
            d = (first.end - first.start) / first.length
            pieces[0] = Segment(first.start + head * d, first.end)
        if tail > 0:
            last = pieces[-1]
            if not isinstance(last, Segment) or tail >= last.length:
                raise ValueError("can only trim inside a trailing segment")
            d = (last.end - last.start) / last.length
            pieces[-1] = Segment(last.start, last.end - tail * d)
        return PathSpec(tuple(pieces))


def segment_path(start: complex, end: complex) -> PathSpec:
    if start == end:
        raise DegeneratePath("segment endpoints coincide")
    return PathSpec((Segment(complex(start), complex(end)),))


# ---------------------------------------------------------------------------
# construction


def _on_open_segment(p: complex, a: complex, b: complex, rtol: float = ON_LINE_RTOL):
    """Return the segment parameter of ``p`` if it lies on the open segment (a, b)."""
    d = b - a
    w = (p - a) / d
    if abs(w.imag) > rtol:
        return None
    if w.real <= rtol or w.real >= 1 - rtol:
        return None
    return w.real


def _dedupe(points, scale):
    out = []
    for p in points:
        if all(abs(p - q) > ON_LINE_RTOL * scale for q in out):
            out.append(p)
    return out


def _orientation_for(pole, orientation, scale):
    if isinstance(orientation, str):
        return orientation
    for key, value in orientation.items():
        if abs(complex(key) - pole) <= ON_LINE_RTOL * scale:
            return value
    raise KeyError(f"no orientation given for pole {pole}")


def _detour_pieces(center, direction, radius, orientation, shape):
    """Half-circle (or 3-segment box) around ``center`` for travel along ``direction``."""
    before = center - radius * direction
    after = center + radius * direction
    base = cmath.phase(direction)
    if orientation == CLOCKWISE:
        # clockwise about the pole passes on the left of the travel direction
        normal = 1j * direction
        arc = Arc(center, radius, base + math.pi, base, CLOCKWISE)
    else:
        normal = -1j * direction
        arc = Arc(center, radius, base - math.pi, base, ANTICLOCKWISE)
    if shape == "arc":
        return [arc]
    if shape == "polygon":
        p1 = before + radius * normal
        p2 = after + radius * normal
        return [Segment(before, p1), Segment(p1, p2), Segment(p2, after)]
    raise ValueError(f"unknown detour shape {shape!r}")


def default_detour_radius(start: complex, end: complex, poles: Sequence[complex]) -> float:
    """0.05 times the smallest gap involving a pole on the open segment."""
    scale = max(abs(start), abs(end), abs(end - start))
    poles = _dedupe([complex(p) for p in poles], scale)
    on = [p for p in poles if _on_open_segment(p, start, end) is not None]
    gaps = [abs(end - start)]
    for p in on:
        gaps.extend(abs(p - q) for q in [start, end] + poles if abs(p - q) > ON_LINE_RTOL * scale)
    return 0.05 * min(gaps)


def build_detour_segment(
    start: complex,
    end: complex,
    poles: Sequence[complex] = (),
    orientation: Union[str, Mapping] = CLOCKWISE,
    radius: float | None = None,
    shape: str = "arc",
) -> PathSpec:
    """Straight segment with half-circle detours around the poles lying on it."""
    start, end = complex(start), complex(end)
    if start == end:
        raise DegeneratePath("segment endpoints coincide")
    scale = max(abs(start), abs(end), abs(end - start))
    poles = _dedupe([complex(p) for p in poles], scale)
    on = sorted(
        ((u, p) for p in poles if (u := _on_open_segment(p, start, end)) is not None),
        key=lambda item: item[0],
    )
    if not on:
        return PathSpec((Segment(start, end),))
    if radius is None:
        radius = default_detour_radius(start, end, poles)
    anchors = [start] + [p for _, p in on] + [end]
    min_gap = min(abs(b - a) for a, b in zip(anchors, anchors[1:]))
    if radius <= 0 or radius >= 0.5 * min_gap:
        raise RadiusTooLarge(f"radius {radius} must be below half the pole gap {min_gap}")
    direction = (end - start) / abs(end - start)
    pieces: list = []
    cursor = start
    for _, p in on:
        before = p - radius * direction
        pieces.append(Segment(cursor, before))
        pieces.extend(_detour_pieces(p, direction, radius, _orientation_for(p, orientation, scale), shape))
        cursor = p + radius * direction
    pieces.append(Segment(cursor, end))
    return PathSpec(tuple(pieces))


def _ray_distance(p: complex, origin: complex, direction: complex) -> float:
    w = (p - origin) / direction
    if w.real <= 0:
        return abs(p - origin)
    return abs(w.imag)


def build_multiplier_contour(
    phi: float,
    target: complex,
    poles: Sequence[complex] = (),
    big_radius: float | None = None,
    small_radius: float | None = None,
) -> PathSpec:
    """Contour out along -r, clockwise on a large circle, back along target - r.

    ``phi`` is the ray angle in units of pi.  Poles on the outbound leg are
    avoided by clockwise half-circles, on the inbound leg by anticlockwise ones.
    """
    target = complex(target)
    u = cmath.exp(1j * math.pi * phi)
    if (target / u).imag <= 0:
        raise ValueError("target must lie in the half-plane to the left of the ray")
    poles = [complex(p) for p in poles]
    scale = max([abs(target)] + [abs(p) for p in poles])
    if big_radius is None:
        big_radius = 4.0 * scale
    if big_radius <= 2 * max([abs(target)] + [abs(p) for p in poles]):
        raise ValueError("big_radius must exceed twice the largest pole modulus")
    legs = ((0j, -u), (target, -u))
    on_ray, near = [], []
    for p in poles:
        for origin, d in legs:
            if abs(p - origin) <= ON_LINE_RTOL * scale:
                continue  # pole at the start or end point
            dist = _ray_distance(p, origin, d)
            if dist <= ON_LINE_RTOL * scale:
                on_ray.append((origin, p))
            else:
                near.append(dist)
    if small_radius is None:
        anchors = _dedupe([0j, target] + poles, scale)
        gaps = [abs(a - b) for i, a in enumerate(anchors) for b in anchors[i + 1:]]
        small_radius = 0.05 * min(gaps)
        if near:
            small_radius = min(small_radius, 0.5 * min(near))
    if near and min(near) < small_radius:
        raise RayHitsPole(f"a pole lies within {small_radius} of the contour rays")
    out_end = -big_radius * u
    b = (target * u.conjugate()).real
    x1 = b + math.sqrt(b * b - abs(target) ** 2 + big_radius**2)
    in_start = target - x1 * u
    out_poles = [p for origin, p in on_ray if origin == 0j]
    in_poles = [p for origin, p in on_ray if origin == target]
    outbound = build_detour_segment(0j, out_end, out_poles, CLOCKWISE, small_radius if out_poles else None)
    theta0 = cmath.phase(out_end)
    delta = (theta0 - cmath.phase(in_start)) % (2 * math.pi)
    circle = Arc(0j, big_radius, theta0, theta0 - delta, CLOCKWISE)
    circle_path = PathSpec((circle,))
    # snap the inbound start onto the arc end to keep the joint exact
    inbound = build_detour_segment(circle.end, target, in_poles, ANTICLOCKWISE, small_radius if in_poles else None)
    return outbound + circle_path + inbound


# ---------------------------------------------------------------------------
# iterated integrals


@dataclass(frozen=True)
class IteratedIntegralSpec:
    poles: tuple
    convention: str = "nostar"

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(complex(p) for p in self.poles))
        if self.convention not in ("star", "nostar"):
            raise ValueError("convention must be 'star' or 'nostar'")

    def nostar_poles(self) -> tuple:
        return self.poles if self.convention == "nostar" else tuple(reversed(self.poles))

    def to(self, convention: str) -> "IteratedIntegralSpec":
        if convention == self.convention:
            return self
        return IteratedIntegralSpec(tuple(reversed(self.poles)), convention)


_STAGES = 12


def _collocation_tables(s: int):
    x, w = legendre.leggauss(s)
    vander_inv = np.linalg.inv(legendre.legvander(x, s - 1))
    integ = np.empty((s, s))
    for m in range(s):
        coef = np.zeros(s)
        coef[m] = 1.0
        integ[:, m] = legendre.legval(x, legendre.legint(coef, lbnd=-1))
    # map [-1, 1] to [0, 1]
    return (x + 1) / 2, w / 2, (integ @ vander_inv) / 2


_NODES, _WEIGHTS, _INTEG = _collocation_tables(_STAGES)


def _panel(piece, a: float, b: float, y: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """One collocation step of the companion system over [a, b]."""
    h = b - a
    tau = a + h * _NODES
    g = piece.velocity(tau)[None, :] / (piece.point(tau)[None, :] - poles[:, None])
    out = y.copy()
    prev = np.ones(_STAGES, dtype=complex)
    for k in range(len(poles)):
        integrand = g[k] * prev
        prev = y[k + 1] + h * (_INTEG @ integrand)
        out[k + 1] = y[k + 1] + h * (_WEIGHTS @ integrand)
    return out


def _integrate_piece(piece, y, poles, tol, singular_end, max_panels=200000):
    a, step = 0.0, 1.0
    panels = 0
    keep = ~singular_end
    while a < 1.0:
        b = min(1.0, a + step)
        full = _panel(piece, a, b, y, poles)
        m = 0.5 * (a + b)
        half = _panel(piece, m, b, _panel(piece, a, m, y, poles), poles)
        if b < 1.0:
            err_mask = slice(None)
        else:
            err_mask = np.concatenate(([True], keep))
        diff = np.abs(full - half)[err_mask]
        scale = np.maximum(1.0, np.abs(half)[err_mask])
        panels += 1
        if np.all(diff <= tol * scale):
            y = half
            step = 2.0 * (b - a)
            a = b
        else:
            step = 0.5 * (b - a)
            if step < 1e-15 or panels > max_panels:
                raise ToleranceNotMet(f"step size underflow near parameter {a} on {piece}")
    return y


def check_poles_off_path(path: PathSpec, poles: Sequence[complex], allow_end_for=()) -> None:
    scale = max(1.0, max(abs(path.start), abs(path.end)))
    for k, p in enumerate(poles):
        for piece_index, piece in enumerate(path.pieces):
            dist = piece.distance(p)
            if dist > ON_LINE_RTOL * scale:
                continue
            first = piece_index == 0 and abs(p - path.start) <= ON_LINE_RTOL * scale
            last = piece_index == len(path.pieces) - 1 and abs(p - path.end) <= ON_LINE_RTOL * scale
            if (first or last) and k in allow_end_for:
                continue
            raise PoleOnPath(f"pole {p} lies on the path")


def integrate_forms(path: PathSpec, poles: Sequence[complex], tol: float = 1e-12) -> np.ndarray:
    """All prefix integrals y_0..y_n (nostar order) at the end of ``path``.

    Poles may coincide with the path endpoints subject to convergence: the
    first form must be regular at the start and the last at the end.
    Components that diverge at the end point are returned as NaN.
    """
    poles = np.array([complex(p) for p in poles], dtype=complex)
    n = len(poles)
    y = np.zeros(n + 1, dtype=complex)
    y[0] = 1.0
    if n == 0:
        return y
    scale = max(1.0, abs(path.start), abs(path.end))
    at_start = np.abs(poles - path.start) <= ON_LINE_RTOL * scale
    at_end = np.abs(poles - path.end) <= ON_LINE_RTOL * scale
    if at_start[0] or at_end[-1]:
        raise PoleOnPath("iterated integral diverges: an outer form has a pole at an endpoint")
    allowed = {k for k in range(n) if at_start[k] or at_end[k]}
    check_poles_off_path(path, poles, allow_end_for=allowed)
    # snap near-coincident poles onto the endpoints exactly
    poles = np.where(at_start, path.start, poles)
    poles = np.where(at_end, path.end, poles)
    no_singularity = np.zeros(n, dtype=bool)
    for index, piece in enumerate(path.pieces):
        last = index == len(path.pieces) - 1
        y = _integrate_piece(piece, y, poles, tol, at_end if last else no_singularity)
    y[1:][at_end] = np.nan
    return y


def iterated_integral(path: PathSpec, spec: IteratedIntegralSpec, tol: float = 1e-12) -> complex:
    """Iterated integral of ``dz/(z - p)`` forms along ``path``."""
    if not isinstance(spec, IteratedIntegralSpec):
        spec = IteratedIntegralSpec(tuple(spec))
    poles = spec.nostar_poles()
    if not poles:
        return 1.0 + 0j
    return complex(integrate_forms(path, poles, tol)[-1])
