"""Independent numerical checks built on the Fuchsian (Fourier-Laplace) picture.

The irregular connection d - (Z/t^2 + F/t) dt on C^n corresponds to the
Fuchsian system d - sum_i P_i F/(z - z_i) dz.  Its canonical solutions near
the poles, their Laplace transforms along rays and regularized transport
between poles give the Stokes factors without using the multilogarithm
series.  Plain parallel transport uses scipy's DOP853 integrator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy.integrate import solve_ivp

from .complexpath import (
    ANTICLOCKWISE,
    IteratedIntegralSpec,
    PathSpec,
    build_detour_segment,
    iterated_integral,
)
from .errors import (
    HyperplaneCrossing,
    InadmissibleRay,
    NotConverged,
    OutOfDisc,
    PoleOnPath,
    ProjectorMismatch,
    Resonant,
    SpreadTooLarge,
    TailBoundExceeded,
)
from .liealg import GradedElement, GradedSystem, Ray, project_offdiagonal

TWO_PI_I = 2j * math.pi


def _exp_nilpotent(X: np.ndarray) -> np.ndarray:
    out = np.eye(X.shape[0], dtype=complex)
    term = np.eye(X.shape[0], dtype=complex)
    for k in range(1, X.shape[0] + 1):
        term = term @ X / k
        if not np.any(np.abs(term) > 0):
            break
        out = out + term
    return out


class FuchsianSystem:
    """d - sum_k A_k/(z - p_k) dz with nilpotent residues."""

    def __init__(self, poles: Sequence[complex], residues: Sequence[np.ndarray], blocks=None):
        self.poles = np.array([complex(p) for p in poles])
        self.residues = [np.asarray(A, dtype=complex) for A in residues]
        if len(self.poles) != len(self.residues):
            raise ValueError("one residue per pole")
        self.dim = self.residues[0].shape[0] if self.residues else 0
        for A in self.residues:
            scale = max(1.0, float(np.abs(A).max(initial=0.0)))
            if np.abs(np.linalg.matrix_power(A, self.dim)).max(initial=0.0) > 1e-12 * scale**self.dim:
                raise Resonant("residues must be nilpotent")
        self.blocks = blocks

    @classmethod
    def from_connection(cls, system: GradedSystem, F) -> "FuchsianSystem":
        F = F.matrix() if isinstance(F, GradedElement) else np.asarray(F, dtype=complex)
        residues = [P @ F for P in system.projectors]
        return cls(system.eigenvalues, residues, system.blocks)

    @property
    def m(self) -> int:
        return len(self.poles)

    def omega(self, z: complex) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for p, A in zip(self.poles, self.residues):
            out += A / (z - p)
        return out

    def pole_gap(self, i: int) -> float:
        d = [abs(self.poles[i] - q) for k, q in enumerate(self.poles) if k != i]
        return min(d) if d else math.inf

    def nearest_pole(self, z: complex) -> float:
        return float(np.min(np.abs(self.poles - z))) if self.m else math.inf

    def growth_exponent(self) -> float:
        return float(sum(np.linalg.norm(A, 2) for A in self.residues))


# ---------------------------------------------------------------------------
# parallel transport


def parallel_transport(sys: FuchsianSystem, path: PathSpec, tol: float = 1e-11) -> np.ndarray:
    """Transport matrix along ``path``: solution of dPhi = Omega Phi with Phi(start) = 1."""
    scale = max(1.0, path.length)
    for p in sys.poles:
        if path.distance(p) <= 1e-12 * scale:
            raise PoleOnPath(f"pole {p} lies on the path")
    n = sys.dim
    Y = np.eye(n, dtype=complex)
    for piece in path.pieces:

        def rhs(tau, y, piece=piece):
            z = complex(piece.point(tau))
            dz = complex(piece.velocity(tau))
            return (sys.omega(z) @ y.reshape(n, n) * dz).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), Y.ravel(), method="DOP853", rtol=tol, atol=tol * 1e-3)
        if not sol.success:
            raise NotConverged(sol.message)
        Y = sol.y[:, -1].reshape(n, n)
    return Y


def chen_transport(sys: FuchsianSystem, path: PathSpec, order: int, tol: float = 1e-12) -> np.ndarray:
    """Truncated Chen series: sum over pole words of iterated integrals times residue products."""
    n = sys.dim
    total = np.eye(n, dtype=complex)
    words = [()]
    for _ in range(order):
        words = [w + (k,) for w in words for k in range(sys.m)]
        for w in words:
            # nostar: the first pole is integrated first, so its residue acts first (rightmost)
            I = iterated_integral(path, IteratedIntegralSpec(tuple(sys.poles[k] for k in w)), tol)
            M = np.eye(n, dtype=complex)
            for k in w:
                M = sys.residues[k] @ M
            total = total + I * M
    return total


# ---------------------------------------------------------------------------
# canonical solutions


def _ad_solve(A: np.ndarray, R: np.ndarray, m: int) -> np.ndarray:
    # solves m X - [A, X] = R; ad_A is nilpotent so the Neumann series terminates
    out = np.zeros_like(R)
    term = R / m
    for _ in range(4 * A.shape[0] + 2):
        out = out + term
        term = (A @ term - term @ A) / m
        if not np.any(np.abs(term) > 0):
            break
    return out


def _pole_expansion_coefficients(sys: FuchsianSystem, i: int, z0: complex):
    """B_j with sum_{k != i} A_k/(z - p_k) = sum_j B_j (z - z0)^j (generator)."""
    others = [(p, A) for k, (p, A) in enumerate(zip(sys.poles, sys.residues)) if k != i]
    j = 0
    while True:
        B = np.zeros((sys.dim, sys.dim), dtype=complex)
        for p, A in others:
            B -= A / (p - z0) ** (j + 1)
        yield B
        j += 1


class _Series:
    """Power series sum_m C_m (z - center)^m with lazily computed coefficients."""

    def __init__(self, center, first, step):
        self.center = center
        self.coeffs = [first]
        self._step = step

    def coefficient(self, m):
        while len(self.coeffs) <= m:
            self.coeffs.append(self._step(len(self.coeffs), self.coeffs))
        return self.coeffs[m]

    def evaluate(self, z, radius, tol=1e-16, max_terms=6000):
        """Sum at the points ``z``; terms stop once they fall below tol relative to the running size."""
        w = np.atleast_1d(np.asarray(z, dtype=complex)) - self.center
        rho = float(np.max(np.abs(w))) if w.size else 0.0
        total = np.zeros((w.size,) + self.coeffs[0].shape, dtype=complex)
        power = np.ones(w.size, dtype=complex)
        quiet = 0
        size = 1.0
        for m in range(max_terms):
            C = self.coefficient(m)
            total += power[:, None, None] * C[None]
            size = max(size, float(np.abs(total).max()))
            bound = float(np.abs(C).max(initial=0.0)) * rho**m
            quiet = quiet + 1 if bound <= tol * size else 0
            if quiet >= 4 and m > 4:
                return total
            power = power * w
        raise NotConverged(f"series at radius {rho:.3g} of {radius:.3g} did not converge")


def _canonical_series(sys: FuchsianSystem, i: int) -> _Series:
    A = sys.residues[i]
    gen = _pole_expansion_coefficients(sys, i, sys.poles[i])
    Bs: List[np.ndarray] = []

    def step(m, H):
        while len(Bs) < m:
            Bs.append(next(gen))
        R = np.zeros_like(H[0])
        for j in range(m):
            R = R + Bs[j] @ H[m - 1 - j]
        return _ad_solve(A, R, m)

    return _Series(sys.poles[i], np.eye(sys.dim, dtype=complex), step)


_SERIES_CACHE: dict = {}


def _series_for(sys, i):
    key = (id(sys), i)
    if key not in _SERIES_CACHE or _SERIES_CACHE[key][0] is not sys:
        _SERIES_CACHE[key] = (sys, _canonical_series(sys, i))
    return _SERIES_CACHE[key][1]


def holomorphic_part(sys: FuchsianSystem, i: int, z, tol: float = 1e-15) -> np.ndarray:
    """H_i(z), the holomorphic factor of the canonical solution at pole i."""
    r = np.max(np.abs(np.atleast_1d(z) - sys.poles[i]))
    gap = sys.pole_gap(i)
    if r >= gap:
        raise OutOfDisc(f"|z - p| = {r:.3g} reaches the nearest other pole at {gap:.3g}")
    values = _series_for(sys, i).evaluate(z, gap, tol)
    return values[0] if np.ndim(z) == 0 else values


def canonical_solution(sys: FuchsianSystem, i: int, z: complex, tol: float = 1e-15) -> np.ndarray:
    """Phi_i(z) = H_i(z) (z - p_i)^{A_i} with the principal logarithm."""
    H = holomorphic_part(sys, i, z, tol)
    return H @ _exp_nilpotent(sys.residues[i] * cmath.log(z - sys.poles[i]))


def _regular_series(sys: FuchsianSystem, center: complex, value: np.ndarray) -> _Series:
    gen = _pole_expansion_coefficients(sys, -1, center)
    Bs: List[np.ndarray] = []

    def step(m, C):
        while len(Bs) < m:
            Bs.append(next(gen))
        acc = np.zeros_like(C[0])
        for j in range(m):
            acc = acc + Bs[j] @ C[m - 1 - j]
        return acc / m

    return _Series(center, value, step)


# ---------------------------------------------------------------------------
# regularized transport


def _endpoint_pole(sys, z, scale):
    for k, p in enumerate(sys.poles):
        if abs(z - p) <= 1e-12 * scale:
            return k
    return None


def regularized_transport(
    sys: FuchsianSystem,
    path: PathSpec,
    left: np.ndarray | None = None,
    right: np.ndarray | None = None,
    tol: float = 1e-11,
    trim: float | None = None,
) -> np.ndarray:
    """Regularized transport between poles, computed exactly through canonical solutions.

    The transport on the trimmed path is conjugated by Phi_p at the start and
    Phi_q at the end; the result does not depend on the trimming, so no
    extrapolation is needed.  Ends that are not poles are left as they are.
    With projectors the log factors drop out and only H_p, H_q enter.
    """
    scale = max(1.0, path.length)
    p = _endpoint_pole(sys, path.start, scale)
    q = _endpoint_pole(sys, path.end, scale)
    n = sys.dim
    left = np.eye(n, dtype=complex) if left is None else np.asarray(left, dtype=complex)
    right = np.eye(n, dtype=complex) if right is None else np.asarray(right, dtype=complex)
    head = tail = 0.0
    first, last = path.pieces[0], path.pieces[-1]
    if p is not None:
        head = trim if trim is not None else 0.4 * min(first.length, sys.pole_gap(p))
    if q is not None:
        tail = trim if trim is not None else 0.4 * min(last.length, sys.pole_gap(q))
    inner = path.trim(head, tail)
    T = parallel_transport(sys, inner, tol)
    if p is not None:
        a = inner.start
        T = T @ canonical_solution(sys, p, a)
    if q is not None:
        b = inner.end
        T = np.linalg.solve(canonical_solution(sys, q, b), T)
    return left @ T @ right


def projected_regularized_transport(sys, path, left, right, tol: float = 1e-11) -> np.ndarray:
    """Q PT^reg P after checking Q A_q = 0 and A_p P = 0."""
    scale = max(1.0, path.length)
    p = _endpoint_pole(sys, path.start, scale)
    q = _endpoint_pole(sys, path.end, scale)
    if p is not None and np.abs(sys.residues[p] @ right).max() > 1e-12:
        raise ProjectorMismatch("A_p P must vanish")
    if q is not None and np.abs(left @ sys.residues[q]).max() > 1e-12:
        raise ProjectorMismatch("Q A_q must vanish")
    return regularized_transport(sys, path, left, right, tol)


def regularized_transport_series(sys, path, left, right, order: int, tol: float = 1e-12) -> np.ndarray:
    """Truncated series for Q PT^reg P using regularized iterated integrals."""
    scale = max(1.0, path.length)
    p = _endpoint_pole(sys, path.start, scale)
    q = _endpoint_pole(sys, path.end, scale)
    if p is not None and np.abs(sys.residues[p] @ right).max() > 1e-12:
        raise ProjectorMismatch("A_p P must vanish")
    if q is not None and np.abs(left @ sys.residues[q]).max() > 1e-12:
        raise ProjectorMismatch("Q A_q must vanish")
    total = left @ right
    words = [()]
    for _ in range(order):
        words = [w + (k,) for w in words for k in range(sys.m)]
        for w in words:
            # time order: w[0] first (acts rightmost), w[-1] last
            if w[0] == p or w[-1] == q:
                continue
            M = right
            for k in w:
                M = sys.residues[k] @ M
            M = left @ M
            if not np.any(np.abs(M) > 0):
                continue
            I = iterated_integral(path, IteratedIntegralSpec(tuple(sys.poles[k] for k in w)), tol)
            total = total + I * M
    return total


# ---------------------------------------------------------------------------
# Laplace transform and Stokes factors


@dataclass
class LaplaceConfig:
    ray: Ray
    t_grid: Sequence[complex] = ()
    truncation_radius: float | None = None
    quad_tol: float = 1e-14


_GL_X, _GL_W = legendre.leggauss(24)


def _check_t(ray: Ray, t: complex) -> float:
    c = math.cos(cmath.phase(t / ray.direction))
    if c <= 1e-3:
        raise InadmissibleRay(f"t = {t} is not in the half-plane of the ray {ray.phi} pi")
    return c


def laplace_Y(sys: FuchsianSystem, cfg: LaplaceConfig, i: int, t: complex, scaled: bool = False) -> np.ndarray:
    """Column block (1/t) int_{z_i + r} phi_i(z) exp(-z/t) dz of the Laplace solution.

    With ``scaled`` the result is multiplied by exp(z_i/t), which avoids
    overflow for small |t|.
    """
    if sys.blocks is None:
        raise ValueError("the system needs block data; build it with FuchsianSystem.from_connection")
    ray = cfg.ray
    t = complex(t)
    c = _check_t(ray, t)
    z0 = sys.poles[i]
    u_dir = ray.direction
    for k, p in enumerate(sys.poles):
        if k != i:
            w = (p - z0) / u_dir
            if w.real > 0 and abs(w.imag) <= 1e-8 * abs(p - z0):
                raise InadmissibleRay(f"the ray from pole {i} runs into pole {k}")
    sl = sys.blocks[i]
    inclusion = np.zeros((sys.dim, sl.stop - sl.start), dtype=complex)
    inclusion[sl, :] = np.eye(sl.stop - sl.start)
    growth = sys.growth_exponent()
    decay = c / abs(t)
    R_max = cfg.truncation_radius if cfg.truncation_radius is not None else 400.0 / decay + 10.0 * sys.pole_gap(i)
    total = np.zeros_like(inclusion)
    u = 0.0
    # first panel from the canonical series at the pole
    series = _series_for(sys, i)
    radius = 0.5 * sys.pole_gap(i)
    if not math.isfinite(radius):
        radius = math.inf
    C_bound = 1.0
    value = inclusion
    while True:
        if u == 0.0:
            reach = min(radius, 1.0 / decay)
            evaluator = lambda pts: series.evaluate(pts, 2 * radius) @ inclusion
        else:
            center = z0 + u * u_dir
            local = 0.5 * sys.nearest_pole(center)
            reach = min(local, 1.0 / decay) if math.isfinite(local) else 1.0 / decay
            reg = _regular_series(sys, center, value)
            evaluator = lambda pts, reg=reg, local=local: reg.evaluate(pts, 2 * local)
        a, b = u, u + reach
        nodes = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        pts = z0 + nodes * u_dir
        vals = evaluator(np.concatenate([pts, [z0 + b * u_dir]]))
        weights = 0.5 * (b - a) * _GL_W * np.exp(-(nodes * u_dir) / t) * u_dir
        total = total + np.tensordot(weights, vals[:-1], axes=(0, 0))
        value = vals[-1]
        C_bound = max(C_bound, float(np.abs(vals).max()) / (1.0 + b) ** growth)
        u = b
        tail = C_bound * (1.0 + u) ** growth * math.exp(-decay * u) / decay
        if decay * u > growth + 1 and tail <= cfg.quad_tol * max(1.0, float(np.abs(total).max())):
            break
        if u > R_max:
            raise TailBoundExceeded(f"tail bound {tail:.2e} not reached by R = {R_max:.3g}")
    Y = total / t
    if not scaled:
        Y = Y * cmath.exp(-z0 / t)
    return Y


def laplace_solution(sys: FuchsianSystem, cfg: LaplaceConfig, t: complex, scaled: bool = False) -> np.ndarray:
    """Y = sum_i Y^(i) P_i assembled by block columns (times exp(Z/t) when ``scaled``)."""
    Y = np.zeros((sys.dim, sys.dim), dtype=complex)
    for i, sl in enumerate(sys.blocks):
        Y[:, sl] = laplace_Y(sys, cfg, i, t, scaled)
    return Y


def default_t_grid(system: GradedSystem, direction: complex, spread: float) -> List[complex]:
    D = max(abs(a - b) for a in system.eigenvalues for b in system.eigenvalues)
    base = cmath.phase(direction)
    return [m * D * cmath.exp(1j * (base + s * spread)) for m in (0.25, 0.5) for s in (-0.5, 0.5)]


def _perturbation_angle(system: GradedSystem, ell: Ray) -> float:
    gaps = []
    for q in system.stokes_rays():
        d = abs(((q.phi - ell.phi + 1.0) % 2.0) - 1.0) * math.pi
        if d > 1e-9:
            gaps.append(d)
    return min([0.1] + [0.5 * g for g in gaps])


@dataclass
class StokesFactorEstimate:
    ray: Ray
    laplace: np.ndarray
    compact: np.ndarray
    spread: float
    samples: List[np.ndarray] = field(default_factory=list)

    def disagreement(self) -> float:
        return float(np.abs(self.laplace - self.compact).max())


def _compact_factor(fsys: FuchsianSystem, system: GradedSystem, F: np.ndarray, ell: Ray, tol) -> np.ndarray:
    S = np.eye(system.n, dtype=complex)
    z = system.eigenvalues
    for j in range(system.m):
        for i in range(system.m):
            if i == j or (j, i) not in system.roots or not ell.contains(z[j] - z[i]):
                continue
            between = [z[k] for k in range(system.m) if k not in (i, j)]
            path = build_detour_segment(z[i], z[j], between, ANTICLOCKWISE)
            left = system.projectors[j] @ F
            block = projected_regularized_transport(fsys, path, left, system.projectors[i], tol)
            S = S + TWO_PI_I * block
    return S


def stokes_factor_numeric(
    system: GradedSystem, F, ell: Ray, cfg: LaplaceConfig | None = None, tol: float = 1e-8
) -> StokesFactorEstimate:
    """Stokes factor for ``ell`` from Laplace solutions on both sides and from the block formula.

    S = Y_{r+}^{-1} Y_{r-} where r+ and r- are small anticlockwise and
    clockwise rotations of ``ell``.
    """
    F = F.matrix() if isinstance(F, GradedElement) else np.asarray(F, dtype=complex)
    if not any(ell.contains(system.zvalue(r)) for r in system.roots):
        raise InadmissibleRay(f"ray {ell.phi} pi is not a Stokes ray")
    fsys = FuchsianSystem.from_connection(system, F)
    eta = _perturbation_angle(system, ell)
    r_plus, r_minus = ell.rotated(eta), ell.rotated(-eta)
    t_grid = list(cfg.t_grid) if cfg is not None and cfg.t_grid else default_t_grid(system, ell.direction, eta)
    quad_tol = cfg.quad_tol if cfg is not None else 1e-14
    R = cfg.truncation_radius if cfg is not None else None
    cfg_plus = LaplaceConfig(r_plus, t_grid, R, quad_tol)
    cfg_minus = LaplaceConfig(r_minus, t_grid, R, quad_tol)
    z = np.concatenate([[zz] * k for zz, k in zip(system.eigenvalues, system.multiplicities)])
    samples = []
    for t in t_grid:
        Yp = laplace_solution(fsys, cfg_plus, t, scaled=True)
        Ym = laplace_solution(fsys, cfg_minus, t, scaled=True)
        inner = np.linalg.solve(Yp, Ym)
        # undo the scaling: S = e^{Z/t} inner e^{-Z/t}
        samples.append(np.exp(z[:, None] / t - z[None, :] / t) * inner)
    mean = sum(samples) / len(samples)
    spread = max(float(np.abs(s - mean).max()) for s in samples)
    if spread > 10 * tol:
        raise SpreadTooLarge(f"t-grid estimates spread by {spread:.2e}")
    compact = _compact_factor(fsys, system, F, ell, min(tol, 1e-11))
    return StokesFactorEstimate(ell, mean, compact, spread, samples)


# ---------------------------------------------------------------------------
# isomonodromic deformation


def imd_rhs(system: GradedSystem, F: np.ndarray, dz: Sequence[complex]) -> np.ndarray:
    """dF along a change dz of the eigenvalues: sum over ordered root pairs of [f_b, f_g] dlog g."""
    z = system.eigenvalues
    P = system.projectors
    out = np.zeros_like(F)
    roots = set(system.roots)
    for i in range(system.m):
        for j in range(system.m):
            if (i, j) not in roots:
                continue
            for k in range(system.m):
                if k in (i, j) or (i, k) not in roots or (k, j) not in roots:
                    continue
                prod = P[i] @ F @ P[k] @ F @ P[j]
                dlog = (dz[k] - dz[j]) / (z[k] - z[j]) - (dz[i] - dz[k]) / (z[i] - z[k])
                out = out + prod * dlog
    return out


def _min_root_distance(za: Sequence[complex], zb: Sequence[complex], roots) -> float:
    best = math.inf
    for i, j in roots:
        a, b = za[i] - za[j], zb[i] - zb[j]
        d = b - a
        if d == 0:
            best = min(best, abs(a))
            continue
        s = min(1.0, max(0.0, -(a * d.conjugate()).real / abs(d) ** 2))
        best = min(best, abs(a + s * d))
    return best


def isomonodromy_flow(
    system: GradedSystem, f0: GradedElement, z_path: Sequence[Sequence[complex]], tol: float = 1e-11
) -> GradedElement:
    """Integrate the isomonodromy equations along the piecewise-linear eigenvalue path."""
    points = [tuple(complex(v) for v in zz) for zz in z_path]
    if len(points) < 2:
        raise ValueError("the path needs at least two eigenvalue tuples")
    scale = max(abs(v) for zz in points for v in zz)
    F = f0.matrix()
    n = system.n
    current = system.with_eigenvalues(points[0])
    for za, zb in zip(points, points[1:]):
        if _min_root_distance(za, zb, system.roots) <= 1e-8 * max(scale, 1.0):
            raise HyperplaneCrossing("the eigenvalue path meets a root hyperplane")
        dz = [b - a for a, b in zip(za, zb)]

        def rhs(tau, y, za=za, dz=dz):
            zs = [a + tau * d for a, d in zip(za, dz)]
            sysx = system.with_eigenvalues(zs)
            return imd_rhs(sysx, y.reshape(n, n), dz).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), F.ravel(), method="DOP853", rtol=tol, atol=tol * 1e-3)
        if not sol.success:
            raise NotConverged(sol.message)
        F = sol.y[:, -1].reshape(n, n)
        current = system.with_eigenvalues(zb)
    return project_offdiagonal(F, current, f0.kind)


# ---------------------------------------------------------------------------
# the differential equation of the inverse coefficients


def gradient_equation_error(J, zs: Sequence[complex], step: float = 1e-5) -> float:
    """Largest relative error between central differences of J_n and the bilinear right-hand side."""
    zs = [complex(z) for z in zs]
    n = len(zs)
    worst = 0.0
    for k in range(n):
        plus = list(zs)
        minus = list(zs)
        plus[k] += step
        minus[k] -= step
        numeric = (J(tuple(plus)) - J(tuple(minus))) / (2 * step)
        exact = 0j
        for i in range(1, n):
            before = sum(zs[:i])
            after = sum(zs[i:])
            dlog = (1.0 / after if k >= i else 0.0) - (1.0 / before if k < i else 0.0)
            exact += J(tuple(zs[:i])) * J(tuple(zs[i:])) * dlog
        worst = max(worst, abs(numeric - exact) / max(abs(exact), 1e-300))
    return worst
