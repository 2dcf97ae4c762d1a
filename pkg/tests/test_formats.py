import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectre import formats
from spectre.fixtures import two_point_real_triple, two_point_triple
from spectre.formats import InputError
from spectre.krein_temporal import oscillator_fixture
from spectre.lorentzian import LatticeSpacetime


def roundtrip(obj):
    return json.loads(json.dumps(obj))


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=6))
def test_complex_encoding_is_lossless(pairs):
    z = np.array([complex(a, b) for a, b in pairs])
    back = formats.decode_complex(roundtrip(formats.encode_complex(z)))
    assert np.array_equal(back.view(np.float64), z.view(np.float64))


@given(finite)
def test_fmt17_round_trips(x):
    assert float(formats.fmt17(x)) == x


def test_decode_complex_rejects_bad_shape():
    with pytest.raises(InputError):
        formats.decode_complex([[1.0, 2.0, 3.0]])


def test_encode_real_non_finite():
    out = formats.encode_real([1.5, np.inf, -np.inf, np.nan])
    assert out == [1.5, "inf", "-inf", "nan"]
    json.dumps(out, allow_nan=False)


@pytest.mark.parametrize("t", [two_point_triple(1.5 - 0.5j), two_point_real_triple(2.0)], ids=["plain", "real"])
def test_triple_round_trip(t):
    back = formats.triple_from_json(roundtrip(formats.triple_to_json(t)))
    assert np.array_equal(back.dirac, t.dirac)
    assert all(np.array_equal(a, b) for a, b in zip(back.algebra_basis, t.algebra_basis))
    assert np.array_equal(back.grading, t.grading)
    if t.real is not None:
        assert back.real.ko_dim == t.real.ko_dim
        assert np.array_equal(back.real.j_matrix, t.real.j_matrix)


def test_temporal_round_trip_with_band():
    f = oscillator_fixture(6)
    obj = roundtrip(formats.temporal_to_json(f.triple, f.band))
    back = formats.temporal_from_json(obj)
    assert np.array_equal(back.T, f.triple.T)
    assert back.phase == f.triple.phase
    assert np.array_equal(formats.band_from_json(obj, back.dim), f.band)
    with pytest.raises(InputError):
        formats.band_from_json(obj, back.dim + 1)


def test_lattice_round_trip():
    m = LatticeSpacetime(5, 7, 0.25, 0.5, lapse=np.linspace(1, 2, 7), topology="periodic", max_stride=3)
    back = formats.lattice_from_json(roundtrip(formats.lattice_to_json(m)))
    assert (back.nt, back.nx, back.dt, back.dx, back.topology, back.max_stride) == (5, 7, 0.25, 0.5, "periodic", 3)
    assert np.array_equal(back.lapse, m.lapse)


def test_poset_and_cone_round_trip():
    R = np.triu(np.ones((3, 3), dtype=bool))
    assert np.array_equal(formats.poset_from_json(roundtrip(formats.poset_to_json(R))), R)
    gens = formats.cone_from_json([[0, 1, 2], [2.5, 1, 0]])
    assert len(gens) == 2 and gens[1][0] == 2.5


def test_states_from_json():
    t = two_point_triple()
    obj = {"states": [{"rho": formats.encode_complex(np.diag([1.0, 0.0]))}, {"values": [[0.0, 0.0], [1.0, 0.0]]}]}
    s = formats.states_from_json(obj, t)
    assert len(s) == 2
    with pytest.raises(InputError):
        formats.states_from_json({"states": [{"values": [[1.0, 0.0]]}]}, t)


def test_csv_uses_17_digits():
    text = formats.to_csv(["a", "b"], [[0.1, "x"], [1 / 3, 2]])
    lines = text.splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "0.10000000000000001,x"
    assert float(lines[2].split(",")[0]) == 1 / 3


def test_load_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "a": [1, 2,\n}\n')
    with pytest.raises(InputError) as e:
        formats.load_json(str(p))
    assert e.value.line == 3 and e.value.column == 1


def test_load_json_missing_file(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        formats.load_json(str(tmp_path / "nope.json"))


@pytest.mark.parametrize("obj", [
    {"dirac": [[[0, 0]]], "algebra_basis": []},
    {"hilbert_dim": "2", "dirac": [], "algebra_basis": []},
])
def test_triple_schema_violations(obj):
    with pytest.raises(InputError, match="schema"):
        formats.triple_from_json(obj)


def test_triple_dimension_mismatch():
    obj = formats.triple_to_json(two_point_triple())
    obj["hilbert_dim"] = 3
    with pytest.raises(InputError):
        formats.triple_from_json(obj)


def test_lattice_schema_violation():
    with pytest.raises(InputError):
        formats.lattice_from_json({"nt": 5, "nx": 5, "dt": -1.0, "dx": 0.5})
