"""Stokes factors, the Stokes map and its inverse, and Stokes multipliers as series.

All series run over chains of blocks b_0 -> b_1 -> ... -> b_n, whose
root components multiply to a matrix in block (b_0, b_n).  The chain is
weighted by a coefficient function read from the target end, that is
evaluated on ``(z_{b(n-1)} - z_{bn}, ..., z_{b0} - z_{b1})``, with the
M factors built on anticlockwise detours.  For M this equals
``(-1)^(n-1) M_n`` on the forward tuple with clockwise detours.  This
reading is the one that reproduces the Stokes data of d - (Z/t^2 + F/t) dt
computed by the Laplace transform in :mod:`stokesdata.oracle`, and it keeps
the logarithm series Lie on collinear tuples.  Truncation is at order ``N``
with an optional check that the order-N contribution is below ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .complexpath import ANTICLOCKWISE
from .errors import InadmissibleRay, NonGeneric, NotConverged, WindowTooSmall
from .liealg import ANGLE_GUARD, ANGLE_TOL, GradedElement, GradedSystem, Ray, project_offdiagonal
from .mlogfun import eval_L, eval_M, eval_Q, eval_Qtilde, phase
from .transforms import make_J

Weight = Tuple[int, ...]


@dataclass(frozen=True)
class TruncationPolicy:
    order: int = 8
    tol: float = 1e-8
    convergence_check: bool = True

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")


DEFAULT_POLICY = TruncationPolicy()


def chain_series(
    system: GradedSystem,
    components: Mapping[Tuple[int, int], np.ndarray],
    coefficient: Callable[[tuple], complex],
    order: int,
    keep: Callable[[int, int], bool],
) -> List[np.ndarray]:
    """Degree-by-degree sums over block chains; entry n-1 holds the degree-n part."""
    n = system.n
    by_source: Dict[int, List[Tuple[int, np.ndarray]]] = {}
    for (i, j), M in components.items():
        if np.any(M != 0):
            by_source.setdefault(i, []).append((j, M))
    z = system.eigenvalues
    degrees = [np.zeros((n, n), dtype=complex) for _ in range(order)]

    def walk(start, current, zs, product):
        depth = len(zs)
        if start != current and keep(start, current):
            c = coefficient(tuple(zs))
            if c != 0:
                degrees[depth - 1] += c * product
        if depth == order:
            return
        for nxt, M in by_source.get(current, ()):
            walk(start, nxt, zs + [z[current] - z[nxt]], product @ M)

    for start in range(system.m):
        for nxt, M in by_source.get(start, ()):
            walk(start, nxt, [z[start] - z[nxt]], M)
    return degrees


def _finish(system, degrees, policy, kind) -> GradedElement:
    if policy.convergence_check and policy.order > 1:
        last = float(np.linalg.norm(degrees[-1], 2))
        if last >= policy.tol:
            raise NotConverged(f"order-{policy.order} term has norm {last:.3e} >= {policy.tol:.1e}")
    return project_offdiagonal(sum(degrees), system, kind)


def _check_f(f: GradedElement) -> None:
    # condition (f): no diagonal-block part; GradedElement only stores root blocks
    system = f.system
    for r in f.components:
        if r not in system.roots:
            raise NonGeneric(f"component {r} is not a root block")


def factor_coefficient(zs: Sequence[complex], tol: float = 1e-12) -> complex:
    """Weight of a chain with forward Z-values ``zs`` in the Stokes factor."""
    return eval_M(tuple(zs)[::-1], tol, orientation=ANTICLOCKWISE)


def map_coefficient(zs: Sequence[complex], tol: float = 1e-12) -> complex:
    """Weight of a chain in the Stokes map."""
    return eval_L(tuple(zs)[::-1], tol, ANTICLOCKWISE)


def inverse_coefficient(zs: Sequence[complex], tol: float = 1e-12) -> complex:
    """Weight of a chain in the inverse Stokes map.

    Unlike the clockwise J_n on the forward tuple, this function satisfies
    dJ_n = sum_i J_i J_(n-i) dlog(s_(>i)/s_(<=i)) with the sign as written.
    """
    return _J(tol)(tuple(zs)[::-1])


def stokes_factor_series(
    system: GradedSystem, f: GradedElement, ray: Ray, policy: TruncationPolicy = DEFAULT_POLICY, tol: float = 1e-12
) -> GradedElement:
    """delta components of the Stokes factor S = 1 + sum delta for ``ray``."""
    _check_f(f)
    if not any(ray.contains(system.zvalue(r)) for r in system.roots):
        raise InadmissibleRay(f"ray {ray.phi} pi is not a Stokes ray")

    def keep(a, b):
        return ray.contains(system.eigenvalues[a] - system.eigenvalues[b])

    degrees = chain_series(system, f.components, lambda zs: factor_coefficient(zs, tol), policy.order, keep)
    return _finish(system, degrees, policy, "delta")


def factor_matrix(delta: GradedElement) -> np.ndarray:
    return np.eye(delta.system.n, dtype=complex) + delta.matrix()


def stokes_map(system: GradedSystem, f: GradedElement, policy: TruncationPolicy = DEFAULT_POLICY, tol: float = 1e-12):
    """epsilon = sum of the logarithms of all Stokes factors."""
    _check_f(f)
    degrees = chain_series(
        system, f.components, lambda zs: map_coefficient(zs, tol), policy.order, lambda a, b: True
    )
    return _finish(system, degrees, policy, "epsilon")


_J_CACHE: Dict[float, object] = {}


def _J(tol):
    if tol not in _J_CACHE:
        _J_CACHE[tol] = make_J(tol, method="inductive", orientation=ANTICLOCKWISE)
    return _J_CACHE[tol]


def stokes_inverse(system: GradedSystem, eps: GradedElement, policy: TruncationPolicy = DEFAULT_POLICY, tol: float = 1e-12):
    """Recover f from epsilon through the J-series."""
    degrees = chain_series(system, eps.components, lambda zs: inverse_coefficient(zs, tol), policy.order, lambda a, b: True)
    return _finish(system, degrees, policy, "f")


# ---------------------------------------------------------------------------
# multipliers


@dataclass
class Multipliers:
    ray: Ray
    S_plus: np.ndarray
    S_minus: np.ndarray
    kappa: GradedElement


def _check_admissible(system: GradedSystem, ray: Ray) -> None:
    if not system.is_admissible(ray) or not system.is_admissible(ray.opposite):
        raise InadmissibleRay(f"ray {ray.phi} pi or its opposite is a Stokes ray")


def _relative_phase(ray: Ray, theta: float) -> float:
    return (ray.phi - theta) % 2.0


def multipliers_from_factors(
    system: GradedSystem,
    f: GradedElement,
    ray: Ray,
    policy: TruncationPolicy = DEFAULT_POLICY,
    tol: float = 1e-12,
    factors: Mapping[float, np.ndarray] | None = None,
) -> Multipliers:
    """S_+ and S_- as ordered products of Stokes factors."""
    _check_admissible(system, ray)
    n = system.n
    identity = np.eye(n, dtype=complex)
    S_plus, S_minus = identity.copy(), identity.copy()
    rays = sorted(system.stokes_rays(), key=lambda q: _relative_phase(q, ray.phi))
    for q in rays:
        if factors is not None and q.phi in factors:
            S = factors[q.phi]
        else:
            S = factor_matrix(stokes_factor_series(system, f, q, policy, tol))
        if _relative_phase(q, ray.phi) < 1.0:
            S_plus = S @ S_plus
        else:
            S_minus = S_minus @ np.linalg.inv(S)
    kappa = project_offdiagonal((S_plus - identity) + (np.linalg.inv(S_minus) - identity), system, "kappa")
    return Multipliers(ray, S_plus, S_minus, kappa)


def multipliers_series(
    system: GradedSystem,
    f: GradedElement,
    ray: Ray,
    policy: TruncationPolicy = DEFAULT_POLICY,
    tol: float = 1e-12,
    coefficients: str = "contour",
):
    """kappa components from the Q-series.

    The coefficient of a chain with n steps is (-1)^(n-1) Q_n on the
    forward tuple.  ``contour`` evaluates Q_n as a contour integral,
    ``chain`` as the phase-ordered sum of M-products with the sign (-1)^(k-1)
    on k-block chains; the two agree.
    """
    _check_admissible(system, ray)
    _check_f(f)
    if coefficients == "chain":
        base = lambda zs: eval_Qtilde(zs, ray.phi, tol, alternating=True)
    elif coefficients == "contour":
        base = lambda zs: eval_Q(zs, ray.phi, tol)
    else:
        raise ValueError("coefficients must be 'chain' or 'contour'")
    degrees = chain_series(
        system, f.components, lambda zs: (-1) ** (len(zs) - 1) * base(zs), policy.order, lambda a, b: True
    )
    return _finish(system, degrees, policy, "kappa")


def multipliers_from_kappa(system: GradedSystem, kappa: GradedElement, ray: Ray) -> Tuple[np.ndarray, np.ndarray]:
    """Rebuild (S_+, S_-) from kappa."""
    identity = np.eye(system.n, dtype=complex)
    plus = kappa.restrict(lambda r: ray.left_half_plane(system.zvalue(r))).matrix()
    minus = kappa.restrict(lambda r: not ray.left_half_plane(system.zvalue(r))).matrix()
    return identity + plus, np.linalg.inv(identity + minus)


# ---------------------------------------------------------------------------
# delta <-> kappa on weight lattices


def _add(a: Weight, b: Weight) -> Weight:
    return tuple(x + y for x, y in zip(a, b))


def _side_support(values: Mapping[Weight, np.ndarray], zvalue, ray: Ray):
    out = {}
    for w, M in values.items():
        zw = zvalue(w)
        if zw == 0 or not np.any(M != 0):
            continue
        if ray.left_half_plane(zw):
            out[w] = M
    return out


def _phase_classes(weights, zvalue, theta):
    """Group weights by phase, highest first; near-ties are refused."""
    phases = sorted(((phase(zvalue(w), theta), w) for w in weights), key=lambda item: -item[0])
    classes: List[Tuple[float, List[Weight]]] = []
    for ph, w in phases:
        if classes and abs(classes[-1][0] - ph) <= ANGLE_TOL:
            classes[-1][1].append(w)
        elif classes and abs(classes[-1][0] - ph) <= ANGLE_GUARD:
            raise NonGeneric("phase tie within the guard band")
        else:
            classes.append((ph, [w]))
    return classes


def _check_window(values, window):
    if window is None:
        return
    for w, M in values.items():
        if w not in window and np.any(M != 0):
            raise WindowTooSmall(f"weight {w} lies outside the window")


def _kappa_one_side(deltas, zvalue, ray, window, max_projection):
    theta = ray.phi
    support = _side_support(deltas, zvalue, ray)
    classes = _phase_classes(support, zvalue, theta)
    if not support:
        return {}
    shape = next(iter(support.values())).shape
    out: Dict[Weight, np.ndarray] = {}
    zero = tuple(0 for _ in next(iter(support)))

    def projection(w):
        return (zvalue(w) / ray.direction).imag

    def rec(index, total, product):
        if total != zero:
            out[total] = out.get(total, np.zeros(shape, dtype=complex)) + product
        for k in range(index, len(classes)):
            for w in classes[k][1]:
                nxt = _add(total, w)
                if window is not None and nxt not in window:
                    continue
                if window is None and projection(nxt) > max_projection * (1 + 1e-12):
                    continue
                P = support[w] if total == zero else product @ support[w]
                if not np.any(P != 0):
                    continue
                rec(k + 1, nxt, P)

    rec(0, zero, None)
    return out


def _delta_one_side(kappas, zvalue, ray, window, max_projection):
    theta = ray.phi
    support = _side_support(kappas, zvalue, ray)
    if not support:
        return {}
    weights = list(support)
    shape = next(iter(support.values())).shape
    zero = tuple(0 for _ in weights[0])
    out: Dict[Weight, np.ndarray] = {}

    def projection(w):
        return (zvalue(w) / ray.direction).imag

    def rec(prefixes, total, product, sign):
        if prefixes:
            target = phase(zvalue(total), theta)
            ok = True
            for p in prefixes[:-1]:
                gap = phase(zvalue(p), theta) - target
                if abs(gap) <= ANGLE_TOL:
                    ok = False
                    break
                if abs(gap) <= ANGLE_GUARD:
                    raise NonGeneric("phase tie within the guard band")
                if gap < 0:
                    ok = False
                    break
            if ok:
                out[total] = out.get(total, np.zeros(shape, dtype=complex)) + sign * product
        for w in weights:
            nxt = _add(total, w)
            if window is not None and nxt not in window:
                continue
            if window is None and projection(nxt) > max_projection * (1 + 1e-12):
                continue
            P = support[w] if total == zero else product @ support[w]
            if not np.any(P != 0):
                continue
            rec(prefixes + [nxt], nxt, P, -sign if prefixes else 1.0)

    rec([], zero, None, 1.0)
    return out


def _max_projection(values, zvalue, ray, window):
    if window is not None:
        return None
    projs = [abs(zvalue(w)) for w in values]
    # without a window the bound is the largest root size times the chain length of the algebra
    return max(projs) * max(1, len(values)) if projs else 0.0


def kappa_from_delta(
    deltas: Mapping[Weight, np.ndarray], zvalue: Callable[[Weight], complex], ray: Ray, window=None, max_projection=None
) -> Dict[Weight, np.ndarray]:
    """kappa_g = sum of delta products with strictly decreasing phases, on both sides of ``ray``."""
    window = set(window) if window is not None else None
    _check_window(deltas, window)
    if max_projection is None:
        max_projection = _max_projection(deltas, zvalue, ray, window)
    out = _kappa_one_side(deltas, zvalue, ray, window, max_projection)
    out.update(_kappa_one_side(deltas, zvalue, ray.opposite, window, max_projection))
    return out


def delta_from_kappa(
    kappas: Mapping[Weight, np.ndarray], zvalue: Callable[[Weight], complex], ray: Ray, window=None, max_projection=None
) -> Dict[Weight, np.ndarray]:
    """Inverse of :func:`kappa_from_delta`, peeling off products of lower-order terms."""
    window = set(window) if window is not None else None
    _check_window(kappas, window)
    if max_projection is None:
        max_projection = _max_projection(kappas, zvalue, ray, window)
    out = _delta_one_side(kappas, zvalue, ray, window, max_projection)
    out.update(_delta_one_side(kappas, zvalue, ray.opposite, window, max_projection))
    return out


def element_weights(element: GradedElement) -> Dict[Weight, np.ndarray]:
    system = element.system
    return {system.weight(r): M for r, M in element.components.items()}


def weights_element(values: Mapping[Weight, np.ndarray], system: GradedSystem, kind: str) -> GradedElement:
    comps = {}
    for w, M in values.items():
        r = system.root_of_weight(w)
        if r is None:
            if np.any(M != 0):
                raise ValueError(f"weight {w} is not a root of the system")
            continue
        comps[r] = M
    return GradedElement(system, comps, kind)


def height_window(zbasis_size: int, height: int) -> set:
    """Non-negative integer weights of total height between 1 and ``height``."""
    out = set()

    def rec(prefix, left):
        if len(prefix) == zbasis_size:
            if sum(prefix) > 0:
                out.add(tuple(prefix))
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], height)
    return out
