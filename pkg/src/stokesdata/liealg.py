"""Graded matrix Lie algebras: eigenvalue blocks of Z, roots, rays, unipotent exp/log.

The diagonal matrix Z has distinct eigenvalues ``z_1..z_m`` repeated with
given multiplicities.  The root attached to the block pair (i, j) acts by
``Z(alpha) = z_i - z_j`` and its root space is the (i, j) block.  Elements
decomposed into root components store each component as a full-size matrix
supported on its block, so products can be formed directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import MixedRays, NonGeneric

ANGLE_TOL = 1e-10
ANGLE_GUARD = 1e-8

Root = Tuple[int, int]


@dataclass(frozen=True)
class Ray:
    """The ray R_{>0} exp(i pi phi); ``phi`` is kept in [0, 2)."""

    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", float(self.phi) % 2.0)

    @classmethod
    def through(cls, z: complex) -> "Ray":
        return cls(cmath.phase(z) / math.pi)

    @property
    def direction(self) -> complex:
        return cmath.exp(1j * math.pi * self.phi)

    @property
    def opposite(self) -> "Ray":
        return Ray(self.phi + 1.0)

    def angle_to(self, z: complex) -> float:
        """Absolute angle in radians between ``z`` and the ray."""
        return abs(cmath.phase(z / self.direction))

    def contains(self, z: complex) -> bool:
        if z == 0:
            return False
        ang = self.angle_to(z)
        if ang <= ANGLE_TOL:
            return True
        if ang <= ANGLE_GUARD:
            raise NonGeneric(f"{z} lies within {ang:.1e} rad of the ray {self.phi} pi")
        return False

    def left_half_plane(self, z: complex) -> bool:
        """Membership of the open half-plane i*H_r (anticlockwise side)."""
        return (z / self.direction).imag > 0

    def rotated(self, radians: float) -> "Ray":
        return Ray(self.phi + radians / math.pi)


class GradedSystem:
    """Block structure of Z inside gl_n (or its upper-triangular Borel subalgebra)."""

    def __init__(self, eigenvalues: Sequence[complex], multiplicities: Sequence[int] | None = None, algebra: str = "gl"):
        eigenvalues = [complex(z) for z in eigenvalues]
        if multiplicities is None:
            multiplicities = [1] * len(eigenvalues)
        if len(multiplicities) != len(eigenvalues):
            raise ValueError("one multiplicity per eigenvalue")
        if any(int(k) < 1 for k in multiplicities):
            raise ValueError("multiplicities must be positive")
        scale = max(1.0, max(abs(z) for z in eigenvalues))
        for a in range(len(eigenvalues)):
            for b in range(a):
                if abs(eigenvalues[a] - eigenvalues[b]) <= 1e-12 * scale:
                    raise NonGeneric("block eigenvalues must be distinct; use multiplicities")
        if algebra not in ("gl", "borel"):
            raise ValueError("algebra must be 'gl' or 'borel'")
        self.eigenvalues = tuple(eigenvalues)
        self.multiplicities = tuple(int(k) for k in multiplicities)
        self.algebra = algebra
        offsets = np.concatenate(([0], np.cumsum(self.multiplicities)))
        self.blocks = tuple(slice(int(a), int(b)) for a, b in zip(offsets, offsets[1:]))
        self.n = int(offsets[-1])
        self.m = len(self.eigenvalues)
        diag = np.concatenate([[z] * k for z, k in zip(self.eigenvalues, self.multiplicities)])
        self.Z = np.diag(diag).astype(complex)
        self.projectors = []
        for sl in self.blocks:
            P = np.zeros((self.n, self.n), dtype=complex)
            P[sl, sl] = np.eye(sl.stop - sl.start)
            self.projectors.append(P)
        if algebra == "gl":
            self.roots: Tuple[Root, ...] = tuple((i, j) for i in range(self.m) for j in range(self.m) if i != j)
        else:
            self.roots = tuple((i, j) for i in range(self.m) for j in range(self.m) if i < j)

    def __repr__(self) -> str:
        return f"GradedSystem({list(self.eigenvalues)}, {list(self.multiplicities)}, {self.algebra!r})"

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "multiplicities": list(self.multiplicities),
            "algebra": self.algebra,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GradedSystem":
        eig = [complex(a, b) for a, b in data["eigenvalues"]]
        return cls(eig, data.get("multiplicities"), data.get("algebra", "gl"))

    def with_eigenvalues(self, eigenvalues: Sequence[complex]) -> "GradedSystem":
        return GradedSystem(eigenvalues, self.multiplicities, self.algebra)

    # roots and weights ---------------------------------------------------
    def zvalue(self, root: Root) -> complex:
        i, j = root
        return self.eigenvalues[i] - self.eigenvalues[j]

    def weight(self, root: Root) -> Tuple[int, ...]:
        w = [0] * self.m
        w[root[0]] += 1
        w[root[1]] -= 1
        return tuple(w)

    def weight_zvalue(self, weight: Sequence[int]) -> complex:
        return sum(k * z for k, z in zip(weight, self.eigenvalues))

    def root_of_weight(self, weight: Sequence[int]):
        for r in self.roots:
            if self.weight(r) == tuple(weight):
                return r
        return None

    def block(self, M: np.ndarray, root: Root) -> np.ndarray:
        i, j = root
        out = np.zeros_like(M, dtype=complex)
        out[self.blocks[i], self.blocks[j]] = M[self.blocks[i], self.blocks[j]]
        return out

    def allowed_step(self, i: int, j: int) -> bool:
        return (i, j) in self.roots

    def stokes_rays(self) -> List[Ray]:
        rays: List[Ray] = []
        for r in self.roots:
            ray = Ray.through(self.zvalue(r))
            if not any(abs(((ray.phi - q.phi + 1) % 2) - 1) <= ANGLE_TOL / math.pi for q in rays):
                rays.append(ray)
        return sorted(rays, key=lambda q: q.phi)

    def is_admissible(self, ray: Ray) -> bool:
        for r in self.roots:
            if ray.angle_to(self.zvalue(r)) <= ANGLE_GUARD:
                return False
        return True


@dataclass
class GradedElement:
    system: GradedSystem
    components: Dict[Root, np.ndarray] = field(default_factory=dict)
    kind: str = "f"

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.system.n, self.system.n), dtype=complex)
        for M in self.components.values():
            out += M
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix(), 2))

    def zvalues(self) -> Dict[Root, complex]:
        return {r: self.system.zvalue(r) for r in self.components}

    def restrict(self, keep) -> "GradedElement":
        return GradedElement(self.system, {r: M for r, M in self.components.items() if keep(r)}, self.kind)

    def max_abs_diff(self, other: "GradedElement") -> float:
        return float(np.max(np.abs(self.matrix() - other.matrix()), initial=0.0))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "matrix": [[[v.real, v.imag] for v in row] for row in self.matrix()],
            "components": [
                {"root": list(r), "zvalue": [self.system.zvalue(r).real, self.system.zvalue(r).imag]}
                for r in sorted(self.components)
                if np.any(self.components[r] != 0)
            ],
        }

    @classmethod
    def from_json(cls, data: dict, system: GradedSystem, kind: str | None = None) -> "GradedElement":
        M = np.array([[complex(a, b) for a, b in row] for row in data["matrix"]], dtype=complex)
        return project_offdiagonal(M, system, kind or data.get("kind", "f"))


def project_offdiagonal(M: np.ndarray, system: GradedSystem, kind: str = "f") -> GradedElement:
    """Keep the root blocks of ``M``; diagonal blocks are dropped."""
    M = np.asarray(M, dtype=complex)
    if M.shape != (system.n, system.n):
        raise ValueError(f"expected a {system.n}x{system.n} matrix")
    comps = {}
    for r in system.roots:
        B = system.block(M, r)
        if np.any(B != 0):
            comps[r] = B
    return GradedElement(system, comps, kind)


def _single_ray(element: GradedElement) -> None:
    values = [element.system.zvalue(r) for r, M in element.components.items() if np.any(M != 0)]
    if not values:
        return
    ray = Ray.through(values[0])
    for v in values[1:]:
        if not ray.contains(v):
            raise MixedRays("components span more than one ray")


def _nilpotent_series(X: np.ndarray, coeff) -> np.ndarray:
    out = np.zeros_like(X)
    power = np.eye(X.shape[0], dtype=complex)
    for k in range(1, X.shape[0] + 1):
        power = power @ X
        if not np.any(power):
            break
        out = out + coeff(k) * power
    return out


def exp_nilpotent(x: GradedElement) -> GradedElement:
    """delta with 1 + delta = exp(x) for x supported on one ray."""
    _single_ray(x)
    D = _nilpotent_series(x.matrix(), lambda k: 1.0 / math.factorial(k))
    return project_offdiagonal(D, x.system, "delta")


def log_unipotent(d: GradedElement) -> GradedElement:
    """epsilon with exp(epsilon) = 1 + d for d supported on one ray."""
    _single_ray(d)
    E = _nilpotent_series(d.matrix(), lambda k: (-1) ** (k - 1) / k)
    return project_offdiagonal(E, d.system, "epsilon")


def stokes_rays(system: GradedSystem) -> List[Ray]:
    return system.stokes_rays()


def random_offdiagonal(system: GradedSystem, norm: float, rng: np.random.Generator) -> GradedElement:
    """Random element with zero diagonal blocks and operator norm ``norm``."""
    M = rng.normal(size=(system.n, system.n)) + 1j * rng.normal(size=(system.n, system.n))
    f = project_offdiagonal(M, system)
    X = f.matrix()
    return project_offdiagonal(X * (norm / np.linalg.norm(X, 2)), system)
