"""JSON and CSV encodings shared by the command-line tools.

Complex matrices are nested lists of ``[re, im]`` pairs.  Python's float
``repr`` is the shortest string that round-trips, so JSON output is
lossless; CSV cells use 17 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

import numpy as np

from .gelfand import StateFunctional
from .krein_temporal import TemporalTriple
from .lorentzian import LatticeSpacetime
from .spectral_triple import FiniteSpectralTriple, RealStructure


class InputError(Exception):
    """Unreadable, malformed or schema-violating input."""

    def __init__(self, msg, line=None, column=None):
        super().__init__(msg)
        self.line = line
        self.column = column


def encode_complex(M) -> list:
    a = np.asarray(M, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def decode_complex(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.shape[-1:] != (2,):
        raise InputError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def encode_real(x):
    """Arrays to nested lists; non-finite floats become strings so JSON stays valid."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        v = float(a)
        if np.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return [encode_real(v) for v in a]


def fmt17(x) -> str:
    return format(float(x), ".17g")


def load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path}: {e.msg}", e.lineno, e.colno) from e


def load_schema(name: str) -> dict:
    return json.loads(resources.files("spectre").joinpath("schemas", f"{name}.schema.json").read_text())


def check_schema(obj, name: str) -> None:
    import jsonschema

    try:
        jsonschema.validate(obj, load_schema(name))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InputError(f"{name} schema violation at {where}: {e.message}") from e


# ---------------------------------------------------------------------------
# triples


def triple_to_json(t: FiniteSpectralTriple) -> dict:
    out = {
        "hilbert_dim": t.hilbert_dim,
        "dirac": encode_complex(t.dirac),
        "algebra_basis": [encode_complex(a) for a in t.algebra_basis],
    }
    if t.grading is not None:
        out["grading"] = encode_complex(t.grading)
    if t.real is not None:
        out["real"] = {"j_matrix": encode_complex(t.real.j_matrix), "ko_dim": t.real.ko_dim}
    return out


def triple_from_json(obj: dict) -> FiniteSpectralTriple:
    check_schema(obj, "triple")
    n = obj["hilbert_dim"]
    try:
        D = decode_complex(obj["dirac"])
        basis = tuple(decode_complex(a) for a in obj["algebra_basis"])
        g = decode_complex(obj["grading"]) if obj.get("grading") is not None else None
        real = None
        if obj.get("real") is not None:
            real = RealStructure(decode_complex(obj["real"]["j_matrix"]), obj["real"]["ko_dim"])
        if D.shape != (n, n):
            raise InputError(f"dirac must be {n}x{n}")
        return FiniteSpectralTriple(basis, D, grading=g, real=real)
    except ValueError as e:
        raise InputError(str(e)) from e


def temporal_to_json(t: TemporalTriple, band=None) -> dict:
    """Optional ``band``: orthonormal columns spanning the subspace used for residuals."""
    out = triple_to_json(t.base)
    out["time_operator"] = encode_complex(t.T)
    out["phase"] = encode_complex(complex(t.phase))
    if band is not None:
        out["band"] = encode_complex(band)
    return out


def temporal_from_json(obj: dict) -> TemporalTriple:
    check_schema(obj, "temporal_triple")
    base = triple_from_json({k: v for k, v in obj.items() if k not in ("time_operator", "phase", "band")})
    phase = complex(*obj.get("phase", [1.0, 0.0]))
    try:
        return TemporalTriple(base, decode_complex(obj["time_operator"]), phase)
    except ValueError as e:
        raise InputError(str(e)) from e


def band_from_json(obj: dict, dim: int):
    if obj.get("band") is None:
        return None
    Q = decode_complex(obj["band"])
    if Q.ndim != 2 or Q.shape[0] != dim:
        raise InputError(f"band must have {dim} rows")
    return Q


# ---------------------------------------------------------------------------
# lattices, states, orders


def lattice_to_json(m: LatticeSpacetime) -> dict:
    return {
        "nt": m.nt, "nx": m.nx, "dt": m.dt, "dx": m.dx,
        "lapse": m.lapse.tolist(), "scale": m.scale.tolist(),
        "topology": m.topology, "max_stride": m.max_stride,
    }


def lattice_from_json(obj: dict) -> LatticeSpacetime:
    check_schema(obj, "lattice")
    try:
        return LatticeSpacetime(
            obj["nt"], obj["nx"], obj["dt"], obj["dx"],
            lapse=obj.get("lapse", 1.0), scale=obj.get("scale", 1.0),
            topology=obj.get("topology", "interval"), max_stride=obj.get("max_stride", 8),
        )
    except ValueError as e:
        raise InputError(str(e)) from e


def states_from_json(obj: dict, t: FiniteSpectralTriple) -> list:
    """``{"states": [{"rho": M} | {"values": [...]}]}``; values are on the algebra basis."""
    check_schema(obj, "states")
    out = []
    for s in obj["states"]:
        if "rho" in s:
            out.append(StateFunctional.from_density(decode_complex(s["rho"])))
        else:
            vals = decode_complex(s["values"])
            if vals.shape != (len(t.algebra_basis),):
                raise InputError("state values must match the algebra basis length")
            out.append(StateFunctional.from_values(t.algebra_basis, vals))
    return out


def poset_to_json(leq) -> dict:
    R = np.asarray(leq, dtype=bool)
    return {"n": int(R.shape[0]), "leq": R.astype(int).tolist()}


def poset_from_json(obj: dict) -> np.ndarray:
    check_schema(obj, "poset")
    R = np.asarray(obj["leq"], dtype=bool)
    if R.shape != (obj["n"], obj["n"]):
        raise InputError("leq must be an n x n matrix")
    return R


def cone_from_json(obj) -> list:
    check_schema(obj, "cone")
    return [np.asarray(v, dtype=float) for v in obj]


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt17(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()
