import cmath
import math

import numpy as np
import pytest

from stokesdata.complexpath import ANTICLOCKWISE, CLOCKWISE, Arc, PathSpec, build_detour_segment, segment_path
from stokesdata.errors import (
    HyperplaneCrossing,
    InadmissibleRay,
    OutOfDisc,
    PoleOnPath,
    ProjectorMismatch,
    Resonant,
)
from stokesdata.liealg import GradedElement, GradedSystem, Ray, random_offdiagonal
from stokesdata.oracle import (
    FuchsianSystem,
    LaplaceConfig,
    canonical_solution,
    chen_transport,
    holomorphic_part,
    isomonodromy_flow,
    gradient_equation_error,
    laplace_solution,
    parallel_transport,
    projected_regularized_transport,
    regularized_transport,
    regularized_transport_series,
    stokes_factor_numeric,
)
from stokesdata.stokes import TruncationPolicy, factor_matrix, inverse_coefficient, multipliers_series, stokes_factor_series
from stokesdata.transforms import make_J


def expm_nilpotent(X):
    out = np.eye(len(X), dtype=complex)
    term = np.eye(len(X), dtype=complex)
    for k in range(1, len(X) + 1):
        term = term @ X / k
        out = out + term
    return out


def fuchsian(eigenvalues, norm, rng):
    system = GradedSystem(eigenvalues)
    F = random_offdiagonal(system, norm, rng).matrix()
    return system, F, FuchsianSystem.from_connection(system, F)


def test_resonant_residue_rejected():
    with pytest.raises(Resonant):
        FuchsianSystem([0.0], [np.diag([1.0, 0.0])])


def test_zero_connection():
    system = GradedSystem([0, 1, 1j])
    zero = GradedElement(system)
    fs = FuchsianSystem.from_connection(system, zero)
    t = 0.3 * cmath.exp(0.2j)
    Y = laplace_solution(fs, LaplaceConfig(Ray(0.06)), t)
    assert np.allclose(Y, np.diag(np.exp(-np.diag(system.Z) / t)), atol=1e-13)
    for ray in system.stokes_rays():
        est = stokes_factor_numeric(system, zero, ray)
        assert np.abs(est.laplace - np.eye(3)).max() < 1e-12
        assert np.abs(est.compact - np.eye(3)).max() == 0


def test_single_pole_monodromy():
    N = np.array([[0, 0.7], [0, 0]], dtype=complex)
    fs = FuchsianSystem([0.2], [N])
    loop = PathSpec((Arc(0.2, 0.5, 0, 2 * math.pi),))
    assert np.abs(parallel_transport(fs, loop) - expm_nilpotent(2j * math.pi * N)).max() < 1e-10


def test_pole_on_path(rng):
    _, _, fs = fuchsian((0, 1, 1j), 0.1, rng)
    with pytest.raises(PoleOnPath):
        parallel_transport(fs, segment_path(-1, 2))


def test_chen_series_matches_ode(rng):
    _, _, fs = fuchsian((0, 1, 1j), 0.2, rng)
    path = segment_path(0.3 + 0.3j, 0.6 - 0.2j)
    assert np.abs(parallel_transport(fs, path) - chen_transport(fs, path, 5)).max() < 1e-7


def test_canonical_solution_limit(rng):
    system, _, fs = fuchsian((0, 1, 1j), 0.005, rng)
    z = 1e-4 * cmath.exp(0.3j)
    A = fs.residues[0]
    residual = expm_nilpotent(-A * cmath.log(z)) @ canonical_solution(fs, 0, z) - np.eye(3)
    assert np.abs(residual).max() <= 1e-6


def test_canonical_solution_solves_the_system(rng):
    _, _, fs = fuchsian((0, 1, 1j), 0.3, rng)
    z, h = 0.2 + 0.15j, 1e-5
    d = (canonical_solution(fs, 0, z + h) - canonical_solution(fs, 0, z - h)) / (2 * h)
    assert np.abs(d - fs.omega(z) @ canonical_solution(fs, 0, z)).max() < 1e-8


def test_holomorphic_part_disc(rng):
    _, _, fs = fuchsian((0, 1, 1j), 0.1, rng)
    with pytest.raises(OutOfDisc):
        holomorphic_part(fs, 0, 1.0 + 0.01j)


def test_regularized_transport(rng):
    system, F, fs = fuchsian((0, 1, 2.2 + 0.3j), 0.2, rng)
    path = segment_path(0, 1)
    exact = regularized_transport(fs, path)
    assert np.abs(exact - regularized_transport(fs, path, trim=0.1)).max() < 1e-9
    P0, P1 = system.projectors[0], system.projectors[1]
    projected = projected_regularized_transport(fs, path, P1 @ F, P0)
    series = regularized_transport_series(fs, path, P1 @ F, P0, 5)
    assert np.abs(projected - series).max() < 1e-6
    with pytest.raises(ProjectorMismatch):
        projected_regularized_transport(fs, path, np.eye(3), P0)
    with pytest.raises(ProjectorMismatch):
        regularized_transport_series(fs, path, P1 @ F, np.eye(3), 3)


def test_monodromy_jump(rng):
    _, _, fs = fuchsian((0, 1, 2.2 + 0.3j), 0.2, rng)
    up = build_detour_segment(0, 1.7, [1.0], ANTICLOCKWISE, radius=0.2)
    down = build_detour_segment(0, 1.7, [1.0], CLOCKWISE, radius=0.2)
    lhs = regularized_transport(fs, up) - regularized_transport(fs, down)
    jump = expm_nilpotent(2j * math.pi * fs.residues[1]) - np.eye(3)
    rhs = regularized_transport(fs, segment_path(1, 1.7)) @ jump @ regularized_transport(fs, segment_path(0, 1))
    assert np.abs(lhs - rhs).max() <= 1e-6


def test_laplace_solution_ode(rng):
    system, F, fs = fuchsian((0, 1, 1j), 0.3, rng)
    cfg = LaplaceConfig(Ray(0.2))
    t, h = 0.7 * cmath.exp(0.2j * math.pi), 1e-4
    d = (laplace_solution(fs, cfg, t + h) - laplace_solution(fs, cfg, t - h)) / (2 * h)
    Y = laplace_solution(fs, cfg, t)
    assert np.abs(d - (system.Z / t**2 + F / t) @ Y).max() < 1e-6


def test_laplace_asymptotics(rng):
    _, _, fs = fuchsian((0, 1, 1j), 0.005, rng)
    ray = Ray(0.13)
    Y = laplace_solution(fs, LaplaceConfig(ray), 1e-2 * ray.direction, scaled=True)
    assert np.abs(Y - np.eye(3)).max() <= 1e-4


def test_laplace_needs_half_plane(rng):
    _, _, fs = fuchsian((0, 1, 1j), 0.1, rng)
    with pytest.raises(InadmissibleRay):
        laplace_solution(fs, LaplaceConfig(Ray(0.13)), -0.3)


@pytest.mark.parametrize("eigenvalues", [(0, 1), (0, 1, 1j), (0, 1, 2)])
def test_numeric_factor_matches_series(rng, eigenvalues):
    system = GradedSystem(eigenvalues)
    f = random_offdiagonal(system, 0.05, rng)
    for ray in system.stokes_rays():
        est = stokes_factor_numeric(system, f, ray)
        S = factor_matrix(stokes_factor_series(system, f, ray, TruncationPolicy(order=8, tol=1e-6)))
        assert est.spread < 1e-9
        assert np.abs(est.laplace - S).max() < 1e-8
        assert np.abs(est.compact - S).max() < 1e-8


def test_numeric_factor_needs_stokes_ray(rng):
    system = GradedSystem([0, 1])
    with pytest.raises(InadmissibleRay):
        stokes_factor_numeric(system, random_offdiagonal(system, 0.05, rng), Ray(0.4))


def test_isomonodromic_flow_keeps_multipliers(rng):
    system = GradedSystem((0, 1, 1j))
    f = random_offdiagonal(system, 0.05, rng)
    path = [(0, 1 + 0.1 * math.sin(math.pi * k / 20), 1j + 0.2 * k / 20) for k in range(21)]
    g = isomonodromy_flow(system, f, path)
    ray, policy = Ray(0.1), TruncationPolicy(order=8)
    before = multipliers_series(system, f, ray, policy).matrix()
    after = multipliers_series(g.system, g, ray, policy).matrix()
    assert np.abs(before - after).max() < 1e-8
    assert np.abs(f.matrix() - g.matrix()).max() > 1e-4


def test_gl2_flow_is_constant(rng):
    system = GradedSystem((0, 1))
    f = random_offdiagonal(system, 0.3, rng)
    g = isomonodromy_flow(system, f, [(0, 1), (0.5j, 2)])
    assert np.array_equal(g.matrix(), f.matrix())


def test_flow_rejects_hyperplane(rng):
    system = GradedSystem((0, 1, 1j))
    f = random_offdiagonal(system, 0.05, rng)
    with pytest.raises(HyperplaneCrossing):
        isomonodromy_flow(system, f, [(0, 1, 1j), (0, 1, -1j)])


@pytest.mark.parametrize("zs", [(1 + 0.5j, -0.3 + 1j), (0.7 - 0.2j, 0.4 + 1j, -1 + 0.3j)])
def test_inverse_coefficients_satisfy_gradient_equation(zs):
    assert gradient_equation_error(inverse_coefficient, zs) <= 1e-4
    # the clockwise forward-tuple J_n obeys the equation with the opposite sign
    assert abs(gradient_equation_error(make_J(), zs) - 2.0) < 1e-6
