import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from spectre import formats
from spectre.cli import run
from spectre.fixtures import circle_position_triple, two_point_real_triple, two_point_triple
from spectre.krein_temporal import oscillator_fixture
from spectre.lorentzian import LatticeSpacetime


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)

    out = {
        "two_point": write("two_point.json", formats.triple_to_json(two_point_triple(1.0))),
        "real": write("real.json", formats.triple_to_json(two_point_real_triple(1.0))),
        "circle": write("circle.json", formats.triple_to_json(circle_position_triple(6))),
        "mink9": write("mink9.json", formats.lattice_to_json(LatticeSpacetime.minkowski(9, 1 / 8))),
        "mink64": write("mink64.json", formats.lattice_to_json(LatticeSpacetime.minkowski(65, 1 / 64))),
        "cone": write("cone.json", [[0, 1, 2], [0, 2, 1]]),
        "poset": write("poset.json", {"n": 3, "leq": [[1, 1, 1], [0, 1, 0], [0, 0, 1]]}),
        "states": write("states.json", {"states": [
            {"rho": formats.encode_complex(np.diag([1.0, 0.0]))},
            {"rho": formats.encode_complex(np.diag([0.0, 1.0]))},
            {"rho": formats.encode_complex(np.diag([0.5, 0.5]))},
        ]}),
    }
    f = oscillator_fixture(8)
    out["temporal"] = write("temporal.json", formats.temporal_to_json(f.triple, f.band))
    f = oscillator_fixture(8, fault=1e-3)
    out["temporal_fault"] = write("temporal_fault.json", formats.temporal_to_json(f.triple, f.band))
    bad = formats.triple_to_json(two_point_triple())
    bad["grading"] = formats.encode_complex(np.eye(2))
    out["bad_grading"] = write("bad_grading.json", bad)
    out["tmp"] = tmp_path
    return out


def call(capsys, *argv):
    code = run(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def check(text, schema):
    obj = json.loads(text)
    jsonschema.validate(obj, formats.load_schema(schema))
    return obj


def test_validate_ok(capsys, files):
    code, out, _ = call(capsys, "validate", "--in", files["two_point"], "--tol", "1e-8")
    assert code == 0
    assert check(out, "validation_report")["passed"]


def test_validate_failure_exit_1(capsys, files):
    code, out, _ = call(capsys, "validate", "--in", files["bad_grading"])
    assert code == 1
    rep = check(out, "validation_report")
    assert not rep["passed"]


def test_malformed_json_exit_2(capsys, files):
    p = files["tmp"] / "broken.json"
    p.write_text('{"hilbert_dim": 2,\n "dirac": [\n')
    code, out, err = call(capsys, "validate", "--in", str(p))
    assert code == 2 and out == ""
    e = check(err, "error")
    assert e["exit_code"] == 2 and e["line"] == 3 and e["column"] is not None


def test_schema_violation_exit_2(capsys, files):
    p = files["tmp"] / "wrong.json"
    p.write_text(json.dumps({"hilbert_dim": 2}))
    code, _, err = call(capsys, "validate", "--in", str(p))
    assert code == 2
    assert "schema" in json.loads(err)["message"]


def test_missing_file_and_bad_tol(capsys, files):
    assert call(capsys, "validate", "--in", str(files["tmp"] / "nope.json"))[0] == 2
    assert call(capsys, "validate", "--in", files["two_point"], "--tol", "-1")[0] == 2


@pytest.mark.parametrize("n", range(8))
def test_ko(capsys, n):
    code, out, _ = call(capsys, "ko", "--n", str(n))
    assert code == 0
    assert check(out, "ko")["ko_dim"] == n


def test_product(capsys, files):
    code, out, _ = call(capsys, "product", "--in", files["real"], "--in2", files["real"])
    assert code == 0
    obj = check(out, "product")
    assert obj["ko_dim"] == 0 and obj["triple"]["hilbert_dim"] == 16


def test_distance_riemannian(capsys, files):
    code, out, _ = call(capsys, "distance-riemannian", "--in", files["two_point"], "--states", files["states"])
    assert code == 0
    M = np.array(check(out, "distance_matrix")["distances"], dtype=float)
    assert M[0, 1] == pytest.approx(1.0, rel=1e-4)
    assert M[0, 2] == pytest.approx(0.5, rel=1e-4)
    code, out, _ = call(capsys, "distance-riemannian", "--in", files["two_point"], "--states", files["states"],
                        "--format", "csv")
    rows = out.splitlines()
    assert rows[0] == "s0,s1,s2" and len(rows) == 4


def test_distance_lorentzian_csv(capsys, files):
    code, out, _ = call(capsys, "distance-lorentzian", "--lattice", files["mink64"], "--from", "0,0", "--to", "32,0",
                        "--method", "both", "--format", "csv")
    assert code == 0
    header, row = out.splitlines()
    assert header == "from,to,relation,dp,variational"
    cells = row.split(",")
    assert float(cells[-2]) == pytest.approx(0.5, abs=1e-12)
    assert float(cells[-1]) == pytest.approx(0.5, abs=1e-4)


def test_distance_lorentzian_json(capsys, files):
    code, out, _ = call(capsys, "distance-lorentzian", "--lattice", files["mink9"], "--from", "4,4", "--to", "0,4",
                        "--method", "dp")
    assert code == 0
    obj = check(out, "lorentzian_distance")
    assert obj["dp"] == 0.0 and obj["variational"] is None


def test_solver_failure_exit_3(capsys, files):
    code, out, err = call(capsys, "distance-lorentzian", "--lattice", files["mink9"], "--from", "0,0", "--to", "4,4",
                          "--method", "variational")
    assert code == 3 and out == ""
    assert check(err, "error")["error"] == "SolverFailure"


def test_bad_point_exit_2(capsys, files):
    code, _, _ = call(capsys, "distance-lorentzian", "--lattice", files["mink9"], "--from", "0;0", "--to", "4,4")
    assert code == 2


def test_equality_witness(capsys, files):
    code, out, _ = call(capsys, "equality-witness", "--lattice", files["mink9"], "--from", "2,4", "--to", "6,4")
    assert code == 0
    obj = check(out, "witness")
    assert obj["gap"] <= 1e-9


def test_dixmier(capsys, files):
    code, out, _ = call(capsys, "dixmier", "--harmonic", "10000")
    assert code == 0
    est = check(out, "dixmier")["estimate"]
    assert abs(est["value"] - 1) <= 0.02
    p = files["tmp"] / "profile.csv"
    np.savetxt(p, 1.0 / np.arange(1, 2001), delimiter=",")
    code, out, _ = call(capsys, "dixmier", "--profile", str(p), "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "N,sigma_N,sigma_over_logN,tau_N"


def test_nc_integral_and_signature(capsys):
    code, out, _ = call(capsys, "nc-integral", "--N", "1000", "--f", '{"0": 2, "1": 0.5, "-1": 0.5}')
    assert code == 0
    assert check(out, "nc_integral")["rel_error"] <= 0.05
    code, out, _ = call(capsys, "signature", "--M", "20")
    assert code == 0
    check(out, "signature")
    code, _, _ = call(capsys, "nc-integral", "--f", "not json")
    assert code == 2


def test_temporal_validate(capsys, files):
    code, out, _ = call(capsys, "temporal-validate", "--in", files["temporal"], "--tol", "1e-9")
    assert code == 0
    check(out, "validation_report")
    code, out, _ = call(capsys, "temporal-validate", "--in", files["temporal_fault"], "--tol", "1e-6")
    assert code == 1
    failed = [c["name"] for c in check(out, "validation_report")["checks"] if not c["passed"]]
    assert failed == ["DJ_selfadjoint"]
    code, out, _ = call(capsys, "temporal-validate", "--in", files["temporal"], "--full")
    assert code == 1


def test_order_reconstruct(capsys, files):
    code, out, _ = call(capsys, "order-reconstruct", "--lattice", files["mink9"], "--depth", "1")
    assert code == 0
    obj = check(out, "order")
    assert obj["completely_separated"] and obj["closure"]["all_isotone"]
    code, out, _ = call(capsys, "order-reconstruct", "--cone", files["cone"], "--poset", files["poset"])
    assert code == 0
    assert check(out, "order")["completely_separated"]
    code, _, _ = call(capsys, "order-reconstruct")
    assert code == 2


def test_order_reconstruct_not_separating(capsys, files):
    p = files["tmp"] / "flat.json"
    p.write_text("[[1, 1, 0]]")
    code, _, err = call(capsys, "order-reconstruct", "--cone", str(p))
    assert code == 1
    assert json.loads(err)["error"] == "NotSeparating"


def test_junk(capsys, files):
    code, out, _ = call(capsys, "junk", "--in", files["circle"])
    assert code == 0
    obj = check(out, "junk")
    assert obj["dimension"] == len(obj["basis"])


def test_output_file_and_determinism(capsys, files):
    outs = []
    for k in range(2):
        target = files["tmp"] / f"out{k}.json"
        code, stdout, _ = call(capsys, "distance-riemannian", "--in", files["two_point"], "--states", files["states"],
                               "--seed", "7", "--out", str(target))
        assert code == 0 and stdout == ""
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point(files):
    r = subprocess.run([sys.executable, "-m", "spectre.cli", "ko", "--n", "6"], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["epsilon"] == 1
