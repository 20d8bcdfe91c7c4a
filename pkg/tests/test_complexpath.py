import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from stokesdata.complexpath import (
    ANTICLOCKWISE,
    CLOCKWISE,
    Arc,
    IteratedIntegralSpec,
    Segment,
    build_detour_segment,
    build_multiplier_contour,
    integrate_forms,
    iterated_integral,
    segment_path,
)
from stokesdata.errors import DegeneratePath, PoleOnPath, RadiusTooLarge

from strategies import cplx


def test_single_detour_geometry():
    path = build_detour_segment(0, 2, [1], CLOCKWISE, radius=0.1)
    first, arc, last = path.pieces
    assert first == Segment(0, 0.9)
    assert isinstance(arc, Arc) and arc.orientation == CLOCKWISE
    assert abs(arc.start - 0.9) < 1e-15 and abs(arc.end - 1.1) < 1e-15
    # clockwise about the pole means passing above it when travelling right
    assert arc.point(0.5).imag > 0
    assert last == Segment(1.1, 2)


def test_pole_off_segment_is_ignored():
    path = build_detour_segment(0, -1 + 1j, [-1], ANTICLOCKWISE)
    assert path.pieces == (Segment(0, -1 + 1j),)


def test_two_detours_with_mixed_orientation():
    path = build_detour_segment(0, 3, [1, 2], {1: CLOCKWISE, 2: ANTICLOCKWISE}, radius=0.1)
    assert len(path.pieces) == 5
    arcs = [p for p in path.pieces if isinstance(p, Arc)]
    assert [a.orientation for a in arcs] == [CLOCKWISE, ANTICLOCKWISE]
    for a, b in zip(path.pieces, path.pieces[1:]):
        assert abs(a.end - b.start) < 1e-14


def test_detour_errors():
    with pytest.raises(RadiusTooLarge):
        build_detour_segment(0, 2, [1], radius=0.6)
    with pytest.raises(DegeneratePath):
        build_detour_segment(1, 1)
    with pytest.raises(PoleOnPath):
        iterated_integral(segment_path(0, 2), IteratedIntegralSpec((1.0,)))


def test_multiplier_contour_shapes():
    path = build_multiplier_contour(0.0, 1j)
    assert len(path.pieces) == 3
    assert isinstance(path.pieces[1], Arc) and path.pieces[1].orientation == CLOCKWISE
    assert abs(path.start) < 1e-15 and abs(path.end - 1j) < 1e-14
    with_pole = build_multiplier_contour(0.0, 1j, poles=[-1.0])
    outbound_arcs = [p for p in with_pole.pieces[:3] if isinstance(p, Arc)]
    assert outbound_arcs[0].orientation == CLOCKWISE and outbound_arcs[0].center == -1


def test_trivial_and_single_form():
    path = segment_path(0, 1)
    assert iterated_integral(path, IteratedIntegralSpec(())) == 1
    # log(z - 2) from 0 to 1
    assert abs(iterated_integral(path, IteratedIntegralSpec((2.0,))) - math.log(0.5)) < 1e-13


def test_two_forms_closed_form():
    # int_0^1 log((t - a)/(-a)) dt/(t - b) against scipy-free closed form via dilogarithm-free check:
    # compare with a fine composite Gauss rule on the inner antiderivative
    a, b = 2.0 + 1j, -1.0 + 0.5j
    x, w = np.polynomial.legendre.leggauss(60)
    t = 0.5 * (x + 1)
    inner = np.log((t - a) / (-a))
    expected = np.sum(0.5 * w * inner / (t - b))
    got = iterated_integral(segment_path(0, 1), IteratedIntegralSpec((a, b)))
    assert abs(got - expected) < 1e-12


@given(cplx(), cplx(), cplx())
def test_shuffle_product(a, b, end):
    path = segment_path(0, end + 3)
    assume(path.distance(a) > 0.05 and path.distance(b) > 0.05)
    ia = iterated_integral(path, IteratedIntegralSpec((a,)))
    ib = iterated_integral(path, IteratedIntegralSpec((b,)))
    iab = iterated_integral(path, IteratedIntegralSpec((a, b)))
    iba = iterated_integral(path, IteratedIntegralSpec((b, a)))
    assert abs(ia * ib - iab - iba) < 1e-10 * max(1, abs(ia * ib))


@given(st.lists(cplx(), min_size=1, max_size=3))
def test_reversal(poles):
    path = build_detour_segment(-0.1j, 4 + 0.2j, [], CLOCKWISE)
    spec = IteratedIntegralSpec(tuple(poles))
    back = IteratedIntegralSpec(tuple(reversed(poles)))
    sign = (-1) ** len(poles)
    assert abs(iterated_integral(path.reversed(), spec) - sign * iterated_integral(path, back)) < 1e-10


def test_star_convention_reverses_letters():
    path = segment_path(0.5j, 2)
    poles = (1 + 1j, -1, 3j)
    star = IteratedIntegralSpec(poles, "star")
    nostar = IteratedIntegralSpec(tuple(reversed(poles)))
    assert iterated_integral(path, star) == iterated_integral(path, nostar)


@given(st.lists(cplx(0.5, 2.0), min_size=0, max_size=2), st.sampled_from([CLOCKWISE, ANTICLOCKWISE]))
def test_detour_radius_invariance(extra, orientation):
    pole = 1 + 0.3j
    path = segment_path(0.3j, 2 + 0.3j)
    assume(all(path.distance(p) > 0.15 for p in extra))
    spec = IteratedIntegralSpec((pole,) + tuple(extra))
    values = [
        iterated_integral(build_detour_segment(0.3j, 2 + 0.3j, [pole], orientation, radius=r), spec)
        for r in (0.05, 0.1)
    ]
    assert abs(values[0] - values[1]) < 1e-9


def test_arc_and_polygon_detours_agree():
    spec = IteratedIntegralSpec((0.5 + 1j, 1.0, -1j))
    arc = build_detour_segment(0, 2, [1.0], ANTICLOCKWISE, radius=0.1)
    box = build_detour_segment(0, 2, [1.0], ANTICLOCKWISE, radius=0.1, shape="polygon")
    assert abs(iterated_integral(arc, spec) - iterated_integral(box, spec)) < 1e-10


def test_jump_identity():
    zs = (0.3 + 0.8j, 1.0, -0.4 - 0.5j)
    up = build_detour_segment(0, 2, [1.0], ANTICLOCKWISE, radius=0.1)
    down = build_detour_segment(0, 2, [1.0], CLOCKWISE, radius=0.1)
    spec = IteratedIntegralSpec(zs)
    lhs = iterated_integral(up, spec) - iterated_integral(down, spec)
    before = iterated_integral(segment_path(0, 1), IteratedIntegralSpec(zs[:1]))
    after = iterated_integral(segment_path(1, 2), IteratedIntegralSpec(zs[2:]))
    assert abs(lhs - 2j * math.pi * before * after) < 1e-10


def test_endpoint_pole_allowed_on_inner_letters():
    # the last letter may not sit at the end point, inner letters may
    path = segment_path(0, 1)
    with pytest.raises(PoleOnPath):
        integrate_forms(path, [2.0, 1.0])
    value = integrate_forms(path, [1.0, 2.0])[-1]
    # int_0^1 log(1 - t) / (t - 2) dt = pi^2 / 12
    assert abs(value - math.pi**2 / 12) < 1e-10
