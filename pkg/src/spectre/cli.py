"""Command-line front end.

Exit codes: 0 success, 1 validation failure or mathematically invalid input,
2 I/O or schema error, 3 solver failure.  Errors are reported as one JSON
object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import formats
from .causal_order import FinitePoset, FunctionCone, cone_closure_check, order_from_cone
from .connes_distance import distance_matrix
from .dixmier import (
    SingularProfile, TrigPoly, dixmier_estimate, nc_integral_check, profile_table, signature_check,
)
from .errors import Infeasible, MaxIterExceeded, SolverFailure, SpectreError
from .formats import InputError
from .krein_temporal import default_band, validate_temporal
from .lorentzian import causal_relation, equality_witness, lorentz_distance_paths, lorentz_distance_variational
from .spectral_triple import junk_subspace, ko_signs, product_triple, validate_triple

SOLVER_ERRORS = (SolverFailure, MaxIterExceeded, Infeasible)


def jsonable(x):
    """Recursively convert numpy values, tuples and non-finite floats for ``json.dumps``."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return formats.encode_complex(x)
        return jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return formats.encode_real(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return formats.encode_complex(x)
    return x


def _point(s: str) -> tuple:
    try:
        t, x = (int(v) for v in s.split(","))
    except ValueError as e:
        raise InputError(f"expected a node as 't,x', got {s!r}") from e
    return t, x


def _trig(s: str | None) -> TrigPoly:
    """``{"k": c}`` with real ``c`` or ``[re, im]``; default the constant 1."""
    if s is None:
        return TrigPoly.constant(1.0)
    try:
        obj = json.loads(s)
        coeffs = {int(k): complex(*v) if isinstance(v, list) else complex(v) for k, v in obj.items()}
    except (ValueError, TypeError, AttributeError) as e:
        raise InputError(f"bad trigonometric coefficients {s!r}") from e
    return TrigPoly(coeffs)


# ---------------------------------------------------------------------------
# commands; each returns (payload, schema name, exit code)


def cmd_validate(a):
    t = formats.triple_from_json(formats.load_json(a.input))
    r = validate_triple(t, a.tol)
    return r.to_dict(), "validation_report", 0 if r.passed else 1


def cmd_ko(a):
    s = ko_signs(a.n)
    return {"ko_dim": a.n, "epsilon": s.epsilon, "epsilon_prime": s.epsilon_prime,
            "epsilon_dprime": s.epsilon_dprime}, "ko", 0


def cmd_product(a):
    t1 = formats.triple_from_json(formats.load_json(a.input))
    t2 = formats.triple_from_json(formats.load_json(a.second))
    p = product_triple(t1, t2)
    r = validate_triple(p, a.tol)
    out = {"triple": formats.triple_to_json(p), "ko_dim": p.real.ko_dim if p.real else None, "report": r.to_dict()}
    return out, "product", 0 if r.passed else 1


def cmd_distance_riemannian(a):
    t = formats.triple_from_json(formats.load_json(a.input))
    states = formats.states_from_json(formats.load_json(a.states), t)
    M = distance_matrix(t, states, a.tol)
    if a.format == "csv":
        rows = [[float(v) for v in row] for row in M]
        return formats.to_csv([f"s{j}" for j in range(len(states))], rows), None, 0
    return {"distances": M, "tol": a.tol}, "distance_matrix", 0


def cmd_distance_lorentzian(a):
    m = formats.lattice_from_json(formats.load_json(a.lattice))
    p, q = _point(a.source), _point(a.target)
    rel = causal_relation(m, p, q)
    dp = lorentz_distance_paths(m, p, q) if a.method in ("dp", "both") else None
    var = lorentz_distance_variational(m, p, q, a.tol).distance if a.method in ("variational", "both") else None
    if a.format == "csv":
        row = [f"{p[0]},{p[1]}", f"{q[0]},{q[1]}", rel.kind,
               "" if dp is None else formats.fmt17(dp), "" if var is None else formats.fmt17(var)]
        return formats.to_csv(["from", "to", "relation", "dp", "variational"], [row]), None, 0
    return {"from": list(p), "to": list(q), "relation": rel.kind, "dp": dp, "variational": var}, "lorentzian_distance", 0


def cmd_equality_witness(a):
    m = formats.lattice_from_json(formats.load_json(a.lattice))
    w = equality_witness(m, _point(a.source), _point(a.target), eps=a.eps)
    out = {"kind": w.kind, "gap": w.gap, "difference": w.difference, "distance": w.distance,
           "f": w.f, "eikonal": w.eikonal, "aux": w.aux, "boundary_warning": w.boundary_warning}
    return out, "witness", 0


def _profile(a) -> SingularProfile:
    if a.profile is None:
        return SingularProfile.from_values(1.0 / np.arange(1, a.harmonic + 1))
    if a.profile.endswith(".json"):
        vals = formats.load_json(a.profile)
    else:
        try:
            vals = np.loadtxt(a.profile, delimiter=",", ndmin=1)
        except (OSError, ValueError) as e:
            raise InputError(f"cannot read profile {a.profile}: {e}") from e
    try:
        return SingularProfile.from_values(np.asarray(vals, dtype=float))
    except (TypeError, ValueError) as e:
        raise InputError(f"bad profile values: {e}") from e


def cmd_dixmier(a):
    sp = _profile(a)
    if a.format == "csv":
        return formats.to_csv(["N", "sigma_N", "sigma_over_logN", "tau_N"],
                              [[int(r[0])] + [float(v) for v in r[1:]] for r in profile_table(sp)]), None, 0
    e = dixmier_estimate(sp, a.method)
    return {"estimate": {"value": e.value, "uncertainty": e.uncertainty, "method": e.method},
            "length": len(sp.mu)}, "dixmier", 0


def _est(e):
    return {"value": e.value, "uncertainty": e.uncertainty, "method": e.method}


def cmd_nc_integral(a):
    r = nc_integral_check(a.N, _trig(a.f), a.n, a.method)
    return {"lhs": r.lhs, "rhs": r.rhs, "rel_error": r.rel_error, "estimate": _est(r.estimate)}, "nc_integral", 0


def cmd_signature(a):
    r = signature_check(a.M, _trig(a.f), q=a.q, lorentzian=not a.riemannian, exponent=a.exponent, method=a.method)
    return {"lhs": _est(r.lhs), "rhs": r.rhs, "factor": r.factor, "trace_delta": _est(r.trace_delta),
            "exponent": r.exponent}, "signature", 0


def cmd_temporal_validate(a):
    obj = formats.load_json(a.input)
    t = formats.temporal_from_json(obj)
    band = None
    if not a.full:
        band = formats.band_from_json(obj, t.dim)
        if band is None:
            band = default_band(t)
    r = validate_temporal(t, a.tol, band)
    return r.to_dict(), "validation_report", 0 if r.passed else 1


def cmd_order_reconstruct(a):
    if a.lattice is not None:
        m = formats.lattice_from_json(formats.load_json(a.lattice))
        cone = FunctionCone.light_cone(m)
        target = FinitePoset.from_lattice(m)
    else:
        if a.cone is None:
            raise InputError("order-reconstruct needs --lattice or --cone")
        cone = FunctionCone(tuple(formats.cone_from_json(formats.load_json(a.cone))))
        target = None
        if a.poset is not None:
            try:
                target = FinitePoset(formats.poset_from_json(formats.load_json(a.poset)))
            except ValueError as e:
                raise InputError(str(e)) from e
    p = order_from_cone(cone.n, cone)
    sep = None if target is None else (p == target)
    closure = None
    if a.depth > 0:
        c = cone_closure_check(cone, a.depth, target)
        closure = {"functions": c.functions, "all_isotone": c.all_isotone, "constants_present": c.constants_present,
                   "violations": c.violations}
    out = formats.poset_to_json(p.leq)
    out.update({"completely_separated": sep, "closure": closure})
    code = 0 if sep in (None, True) and (closure is None or closure["all_isotone"]) else 1
    return out, "order", code


def cmd_junk(a):
    t = formats.triple_from_json(formats.load_json(a.input))
    r = junk_subspace(t, a.degree)
    return {"degree": a.degree, "dimension": r.dimension, "kernel_dim": r.kernel_dim,
            "generator_count": r.generator_count, "basis": [formats.encode_complex(b) for b in r.basis]}, "junk", 0


COMMANDS = {
    "validate": cmd_validate,
    "ko": cmd_ko,
    "product": cmd_product,
    "distance-riemannian": cmd_distance_riemannian,
    "distance-lorentzian": cmd_distance_lorentzian,
    "equality-witness": cmd_equality_witness,
    "dixmier": cmd_dixmier,
    "nc-integral": cmd_nc_integral,
    "signature": cmd_signature,
    "temporal-validate": cmd_temporal_validate,
    "order-reconstruct": cmd_order_reconstruct,
    "junk": cmd_junk,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="tolerance (command-specific default)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = argparse.ArgumentParser(prog="spectre", description="Finite spectral geometry toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the axioms of a finite triple")
    p.add_argument("--in", dest="input", required=True)

    p = sub.add_parser("ko", parents=[common], help="signs of a KO-dimension")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("product", parents=[common], help="product of two triples")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--in2", dest="second", required=True)

    p = sub.add_parser("distance-riemannian", parents=[common], help="spectral distance matrix between states")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--states", required=True)

    p = sub.add_parser("distance-lorentzian", parents=[common], help="Lorentzian distance on a lattice")
    p.add_argument("--lattice", required=True)
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--method", choices=("dp", "variational", "both"), default="both")

    p = sub.add_parser("equality-witness", parents=[common], help="causal function attaining the distance")
    p.add_argument("--lattice", required=True)
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--eps", type=float, default=0.05)

    p = sub.add_parser("dixmier", parents=[common], help="Dixmier trace estimate of a singular-value profile")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--profile", help="CSV or JSON list of singular values")
    g.add_argument("--harmonic", type=int, default=10000, help="use 1/(n+1) of this length")
    p.add_argument("--method", choices=("log_fit", "raw", "cesaro"), default="log_fit")

    p = sub.add_parser("nc-integral", parents=[common], help="noncommutative integral on the circle or torus")
    p.add_argument("--N", type=int, default=4000)
    p.add_argument("--f", help='Fourier coefficients as JSON, e.g. \'{"0": 2, "1": 0.5, "-1": 0.5}\'')
    p.add_argument("--n", type=int, choices=(1, 2), default=1)
    p.add_argument("--method", choices=("log_fit", "raw", "cesaro"), default="log_fit")

    p = sub.add_parser("signature", parents=[common], help="signature formula on the flat torus truncation")
    p.add_argument("--M", type=int, default=60)
    p.add_argument("--f")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--riemannian", action="store_true")
    p.add_argument("--exponent", type=float)
    p.add_argument("--method", choices=("log_fit", "raw", "cesaro"), default="log_fit")

    p = sub.add_parser("temporal-validate", parents=[common], help="residuals of a temporal triple")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--full", action="store_true", help="do not compress to the low band")

    p = sub.add_parser("order-reconstruct", parents=[common], help="order induced by a cone of functions")
    p.add_argument("--lattice")
    p.add_argument("--cone")
    p.add_argument("--poset")
    p.add_argument("--depth", type=int, default=0, help="closure rounds to check (0 skips)")

    p = sub.add_parser("junk", parents=[common], help="junk forms of a given degree")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--degree", type=int, default=2)
    return ap


# argparse parents share action objects, so per-command defaults live here
DEFAULT_TOL = {"validate": 1e-8, "product": 1e-8, "temporal-validate": 0.05}


def _fail(exc: Exception, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, InputError):
        err["line"], err["column"] = exc.line, exc.column
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def run(argv=None) -> int:
    a = build_parser().parse_args(argv)
    if a.tol is None:
        a.tol = DEFAULT_TOL.get(a.command, 1e-6)
    if a.tol <= 0:
        return _fail(InputError("--tol must be positive"), 2)
    np.random.seed(a.seed)
    try:
        payload, schema, code = COMMANDS[a.command](a)
    except InputError as e:
        return _fail(e, 2)
    except SOLVER_ERRORS as e:
        return _fail(e, 3)
    except (SpectreError, ValueError) as e:
        return _fail(e, 1)
    if isinstance(payload, str):
        text = payload
    else:
        payload = jsonable(payload)
        formats.check_schema(payload, schema)
        text = json.dumps(payload, indent=2) + "\n"
    if a.out:
        try:
            with open(a.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as e:
            return _fail(InputError(f"cannot write {a.out}: {e.strerror}"), 2)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
