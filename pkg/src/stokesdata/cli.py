"""Command-line interface: JSON in, JSON out.

Complex numbers are [re, im] pairs, matrices are row-major nested lists and
rays are given as multiples of pi.  Exit status: 0 on success (and when all
requested checks pass), 1 when a verification check fails or on other
library errors, 2 on malformed input, 3 on non-generic data, 4 when a series
or integrator does not converge.  Errors are reported as a JSON object
``{"error": {"code", "type", "message"}}`` on stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any, List, Sequence

import numpy as np

from .errors import NonGeneric, NotConverged, StokesDataError
from .liealg import GradedElement, GradedSystem, Ray, project_offdiagonal, random_offdiagonal
from .mlogfun import eval_L, eval_M, eval_Q, eval_Qtilde
from .oracle import isomonodromy_flow, stokes_factor_numeric
from .stokes import (
    TruncationPolicy,
    factor_matrix,
    multipliers_from_factors,
    multipliers_series,
    stokes_factor_series,
    stokes_inverse,
    stokes_map,
)
from .transforms import make_J, make_L, make_M, make_Qtilde
from .trees import MAX_LEAVES, enumerate_trees

DEFAULT_SEED = 42
MAX_ORDER = 12


class InputError(Exception):
    """Malformed input; exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# ---------------------------------------------------------------------------
# JSON helpers


def cjson(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def mjson(M: np.ndarray) -> list:
    return [[cjson(v) for v in row] for row in np.asarray(M)]


def _load(text: str) -> Any:
    s = text.strip()
    try:
        if s[:1] in "[{" or s[:1].isdigit() or s[:1] == "-":
            return json.loads(s)
        with open(s) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {text!r}: {exc}") from exc


def _complex(value, what: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise InputError(f"{what}: expected [re, im], got {value!r}")


def parse_tuple(data) -> tuple:
    if not isinstance(data, list) or not data:
        raise InputError("a tuple must be a non-empty list of [re, im] pairs")
    return tuple(_complex(v, "tuple entry") for v in data)


def parse_system(data) -> GradedSystem:
    if not isinstance(data, dict) or "eigenvalues" not in data:
        raise InputError("system: expected an object with 'eigenvalues'")
    eig = data["eigenvalues"]
    if not isinstance(eig, list) or len(eig) < 1:
        raise InputError("system: 'eigenvalues' must be a non-empty list")
    mult = data.get("multiplicities")
    if mult is not None and (not isinstance(mult, list) or not all(isinstance(k, int) and k >= 1 for k in mult)):
        raise InputError("system: 'multiplicities' must be a list of positive integers")
    algebra = data.get("algebra", "gl")
    if algebra not in ("gl", "borel"):
        raise InputError("system: 'algebra' must be 'gl' or 'borel'")
    try:
        return GradedSystem([_complex(v, "eigenvalue") for v in eig], mult, algebra)
    except ValueError as exc:
        raise InputError(f"system: {exc}") from exc


def parse_element(data, system: GradedSystem, kind: str) -> GradedElement:
    if not isinstance(data, dict) or "matrix" not in data:
        raise InputError("element: expected an object with 'matrix'")
    rows = data["matrix"]
    if not isinstance(rows, list) or len(rows) != system.n or any(not isinstance(r, list) or len(r) != system.n for r in rows):
        raise InputError(f"element: 'matrix' must be {system.n}x{system.n}")
    M = np.array([[_complex(v, "matrix entry") for v in row] for row in rows], dtype=complex)
    return project_offdiagonal(M, system, data.get("kind", kind))


def element_json(x: GradedElement) -> dict:
    return x.to_json()


# ---------------------------------------------------------------------------
# commands


def _policy(args) -> TruncationPolicy:
    if not 1 <= args.order <= MAX_ORDER:
        raise InputError(f"order must be in [1, {MAX_ORDER}]")
    return TruncationPolicy(order=args.order, tol=args.series_tol, convergence_check=not args.no_check)


def _check_tol(tol: float) -> None:
    if not 0 < tol <= 1e-2:
        raise InputError("tol must lie in (0, 1e-2]")


def _system_and_element(args, kind: str = "f"):
    system = parse_system(_load(args.system))
    if args.element is None:
        rng = np.random.default_rng(args.seed)
        return system, random_offdiagonal(system, args.random_norm, rng)
    return system, parse_element(_load(args.element), system, kind)


def _ray(args) -> Ray:
    if args.ray is None:
        raise InputError("--ray is required")
    return Ray(args.ray)


_FUNCTIONS = {
    "M": lambda zs, a: eval_M(zs, a.tol),
    "L": lambda zs, a: eval_L(zs, a.tol),
    "Q": lambda zs, a: eval_Q(zs, a.phi, a.tol),
    "Qtilde": lambda zs, a: eval_Qtilde(zs, a.phi, a.tol),
}


def _tuples(args) -> List[tuple]:
    data = _load(args.tuple)
    if isinstance(data, list) and data and isinstance(data[0], list) and data[0] and isinstance(data[0][0], list):
        return [parse_tuple(t) for t in data]
    return [parse_tuple(data)]


def _table(args, rows: Sequence[tuple], values: Sequence[complex]):
    batch = len(rows) > 1
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tuple", "re", "im"])
        for zs, v in zip(rows, values):
            w.writerow([json.dumps([cjson(z) for z in zs]), repr(v.real), repr(v.imag)])
        return buf.getvalue()
    if batch:
        return {"values": [{"tuple": [cjson(z) for z in zs], "value": cjson(v)} for zs, v in zip(rows, values)]}
    return {"value": cjson(values[0])}


def cmd_mlog_eval(args):
    _check_tol(args.tol)
    if args.fn in ("Q", "Qtilde") and args.phi is None:
        raise InputError("--phi is required for Q and Qtilde")
    rows = _tuples(args)
    if args.fn == "J":
        J = make_J(args.tol)
        values = [J(zs) for zs in rows]
    else:
        values = [_FUNCTIONS[args.fn](zs, args) for zs in rows]
    return _table(args, rows, values), 0


def cmd_transform_eval(args):
    _check_tol(args.tol)
    if args.name == "Qtilde" and args.phi is None:
        raise InputError("--phi is required for Qtilde")
    makers = {"M": make_M, "L": make_L, "J": make_J}
    T = make_Qtilde(args.phi, args.tol) if args.name == "Qtilde" else makers[args.name](args.tol)
    rows = _tuples(args)
    return _table(args, rows, [T(zs) for zs in rows]), 0


def cmd_trees(args):
    if not 1 <= args.leaves <= MAX_LEAVES:
        raise InputError(f"--leaves must be in [1, {MAX_LEAVES}]")
    trees = enumerate_trees(args.leaves)
    if args.list:
        return "\n".join(T.encode() for T in trees) + "\n", 0
    return f"{len(trees)}\n", 0


def cmd_stokes_map(args):
    _check_tol(args.tol)
    system, f = _system_and_element(args)
    return element_json(stokes_map(system, f, _policy(args), args.tol)), 0


def cmd_stokes_inverse(args):
    _check_tol(args.tol)
    system, eps = _system_and_element(args, "epsilon")
    return element_json(stokes_inverse(system, eps, _policy(args), args.tol)), 0


def cmd_stokes_factor(args):
    _check_tol(args.tol)
    system, f = _system_and_element(args)
    delta = stokes_factor_series(system, f, _ray(args), _policy(args), args.tol)
    out = element_json(delta)
    out["factor"] = mjson(factor_matrix(delta))
    return out, 0


def cmd_multipliers(args):
    _check_tol(args.tol)
    system, f = _system_and_element(args)
    ray = _ray(args)
    kappa = multipliers_series(system, f, ray, _policy(args), args.tol)
    m = multipliers_from_factors(system, f, ray, _policy(args), args.tol)
    out = element_json(kappa)
    out["S_plus"] = mjson(m.S_plus)
    out["S_minus"] = mjson(m.S_minus)
    return out, 0


def _z_path(args, system: GradedSystem) -> List[tuple]:
    if args.z_path is None:
        raise InputError("--z-path is required")
    data = _load(args.z_path)
    if not isinstance(data, list) or len(data) < 2:
        raise InputError("--z-path must list at least two eigenvalue tuples")
    path = [parse_tuple(zz) for zz in data]
    if any(len(zz) != system.m for zz in path):
        raise InputError("every eigenvalue tuple must have one entry per block")
    return path


def cmd_imd_flow(args):
    _check_tol(args.tol)
    system, f = _system_and_element(args)
    path = _z_path(args, system)
    start = system.with_eigenvalues(path[0])
    f = GradedElement(start, f.components, f.kind)
    g = isomonodromy_flow(start, f, path, min(args.tol, 1e-9))
    out = element_json(g)
    out["eigenvalues"] = [cjson(z) for z in path[-1]]
    return out, 0


def _check(name: str, residual: float, tol: float, **extra) -> dict:
    return {"check": name, "residual": residual, "tol": tol, "pass": bool(residual <= tol), **extra}


def cmd_verify(args):
    _check_tol(args.tol)
    system, f = _system_and_element(args)
    policy = _policy(args)
    checks = []
    if args.what == "factor":
        rays = [Ray(args.ray)] if args.ray is not None else system.stokes_rays()
        for ray in rays:
            series = factor_matrix(stokes_factor_series(system, f, ray, policy, min(args.tol, 1e-10)))
            est = stokes_factor_numeric(system, f, ray)
            checks.append(
                _check(
                    f"factor ray {ray.phi:.12g}",
                    float(max(np.abs(series - est.laplace).max(), np.abs(series - est.compact).max())),
                    args.tol,
                    spread=est.spread,
                    order=policy.order,
                )
            )
    elif args.what == "map-roundtrip":
        eps = stokes_map(system, f, policy, min(args.tol, 1e-10))
        g = stokes_inverse(system, eps, policy, min(args.tol, 1e-10))
        checks.append(_check("inverse(map(f)) - f", g.max_abs_diff(f), args.tol, order=policy.order))
    elif args.what == "multipliers":
        ray = _ray(args)
        kappa = multipliers_series(system, f, ray, policy, min(args.tol, 1e-10))
        m = multipliers_from_factors(system, f, ray, policy, min(args.tol, 1e-10))
        checks.append(_check("series - factor products", kappa.max_abs_diff(m.kappa), args.tol, order=policy.order))
    elif args.what == "imd":
        ray = _ray(args)
        path = _z_path(args, system)
        start = system.with_eigenvalues(path[0])
        f0 = GradedElement(start, f.components, f.kind)
        g = isomonodromy_flow(start, f0, path)
        k0 = multipliers_series(start, f0, ray, policy, min(args.tol, 1e-10))
        k1 = multipliers_series(g.system, g, ray, policy, min(args.tol, 1e-10))
        checks.append(_check("multiplier drift", k0.max_abs_diff(k1), args.tol, steps=len(path) - 1))
    report = {"command": f"verify {args.what}", "checks": checks, "pass": all(c["pass"] for c in checks)}
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report, 0 if report["pass"] else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stokesdata", description="Stokes data of irregular connections")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, series=False, data=False):
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--output", help="write the JSON result here instead of stdout")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if series:
            sp.add_argument("--order", type=int, default=8)
            sp.add_argument("--series-tol", type=float, default=1e-8, help="bound on the last-order term")
            sp.add_argument("--no-check", action="store_true", help="skip the truncation check")
        if data:
            sp.add_argument("--system", required=True, help="JSON file or inline JSON")
            sp.add_argument("--element", "--f", dest="element", help="JSON file or inline JSON; random if omitted")
            sp.add_argument("--random-norm", type=float, default=0.05)
            sp.add_argument("--ray", type=float, help="ray angle as a multiple of pi")

    sp = sub.add_parser("mlog-eval", help="evaluate M, L, Q, Qtilde or J")
    sp.add_argument("--fn", choices=["M", "L", "Q", "Qtilde", "J"], required=True)
    sp.add_argument("--tuple", required=True, help="one tuple or a list of tuples")
    sp.add_argument("--phi", type=float)
    sp.add_argument("--csv", action="store_true")
    common(sp)
    sp.set_defaults(run=cmd_mlog_eval)

    sp = sub.add_parser("transform-eval", help="evaluate a transform component")
    sp.add_argument("--name", choices=["M", "L", "J", "Qtilde"], required=True)
    sp.add_argument("--tuple", required=True)
    sp.add_argument("--phi", type=float)
    sp.add_argument("--csv", action="store_true")
    common(sp)
    sp.set_defaults(run=cmd_transform_eval)

    sp = sub.add_parser("trees", help="count or list plane trees")
    sp.add_argument("--leaves", type=int, required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--count", action="store_true")
    g.add_argument("--list", action="store_true")
    common(sp)
    sp.set_defaults(run=cmd_trees)

    for name, fn in [
        ("stokes-map", cmd_stokes_map),
        ("stokes-inverse", cmd_stokes_inverse),
        ("stokes-factor", cmd_stokes_factor),
        ("multipliers", cmd_multipliers),
    ]:
        sp = sub.add_parser(name)
        common(sp, series=True, data=True)
        sp.set_defaults(run=fn)

    sp = sub.add_parser("imd-flow", help="integrate the isomonodromy equations")
    common(sp, data=True)
    sp.add_argument("--z-path", required=True, help="list of eigenvalue tuples")
    sp.set_defaults(run=cmd_imd_flow)

    sp = sub.add_parser("verify", help="cross-check series against independent routes")
    sp.add_argument("what", choices=["factor", "map-roundtrip", "multipliers", "imd"])
    sp.add_argument("--report")
    sp.add_argument("--z-path")
    common(sp, series=True, data=True)
    sp.set_defaults(run=cmd_verify, tol=1e-6)
    return p


def _error(code: int, exc: BaseException, name: str) -> int:
    print(json.dumps({"error": {"code": name, "type": type(exc).__name__, "message": str(exc)}}, sort_keys=True))
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        result, status = args.run(args)
    except InputError as exc:
        return _error(2, exc, "schema")
    except NonGeneric as exc:
        return _error(3, exc, exc.code)
    except NotConverged as exc:
        return _error(4, exc, exc.code)
    except StokesDataError as exc:
        return _error(1, exc, exc.code)
    text = result if isinstance(result, str) else json.dumps(result, sort_keys=True) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
