import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from spectre.errors import MissingGrading, NoRealStructure, NotHermitian
from spectre.fixtures import (
    circle_position_triple,
    circle_truncation,
    diagonal_triple,
    two_point_real_triple,
    two_point_triple,
)
from spectre.numerics import adjoint, commutator, operator_norm
from spectre.spectral_triple import (
    FiniteSpectralTriple,
    RealStructure,
    UniversalFormWord,
    fluctuate_dirac,
    gauge_transform_potential,
    gauge_unitary,
    junk_report,
    junk_subspace,
    ko_signs,
    one_form_residual,
    product_triple,
    represent_form,
    spectral_action,
    validate_triple,
)

from conftest import random_hermitian, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)

# (epsilon, epsilon', epsilon'') for KO-dimensions 0..7, None where the sign is absent
KO_TABLE = [
    (1, 1, 1),
    (1, -1, None),
    (-1, 1, -1),
    (-1, 1, None),
    (-1, 1, 1),
    (-1, -1, None),
    (1, 1, -1),
    (1, 1, None),
]

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def ko4_triple():
    """Graded C^2 with J^2 = -1 and J commuting with the grading."""
    return FiniteSpectralTriple((I2,), np.zeros((2, 2)), grading=I2,
                                real=RealStructure(np.array([[0, 1], [-1, 0]]), 4))


def ko6_triple(m=1.5):
    """C^2 with D = m sigma_x, grading sigma_z and J = sigma_x K."""
    return FiniteSpectralTriple((I2,), m * SX, grading=SZ, real=RealStructure(SX, 6))


def hermitian_one_form(t, rng, terms=3):
    A = np.zeros((t.hilbert_dim,) * 2, dtype=complex)
    basis = t.algebra_basis
    for _ in range(terms):
        a = sum(complex(*rng.normal(size=2)) * b for b in basis)
        b = sum(complex(*rng.normal(size=2)) * c for c in basis)
        A += a @ commutator(t.dirac, b)
    return 0.5 * (A + adjoint(A))


# ---------------------------------------------------------------------------
# KO signs


@pytest.mark.parametrize("n", range(8))
def test_ko_signs_table(n):
    assert tuple(ko_signs(n)) == KO_TABLE[n]


def test_ko_signs_examples():
    assert tuple(ko_signs(0)) == (1, 1, 1)
    assert tuple(ko_signs(2)) == (-1, 1, -1)
    assert tuple(ko_signs(5)) == (-1, -1, None)


@pytest.mark.parametrize("n", [-1, 8, 2.5])
def test_ko_signs_rejects_out_of_range(n):
    with pytest.raises(ValueError):
        ko_signs(n)


# ---------------------------------------------------------------------------
# validation


def test_circle_truncation_passes():
    t = circle_truncation(5)
    assert np.allclose(np.diag(t.dirac).real, [-2, -1, 0, 1, 2])
    rep = validate_triple(t)
    assert rep.passed
    assert "trivially satisfied" in rep["compact_resolvent"].note


def test_non_hermitian_dirac_residual_one():
    t = FiniteSpectralTriple((I2,), np.array([[0, 1j], [0, 0]]))
    rep = validate_triple(t)
    assert not rep.passed
    assert rep.failed == ["dirac_selfadjoint"]
    assert rep["dirac_selfadjoint"].residual == pytest.approx(1.0, abs=1e-12)


def test_ko2_with_positive_square_fails():
    t = FiniteSpectralTriple((I2,), np.zeros((2, 2)), grading=SZ, real=RealStructure(SX, 2))
    rep = validate_triple(t)
    assert "real_J_squared" in rep.failed
    assert rep["real_J_squared"].residual == pytest.approx(2.0)


@pytest.mark.parametrize("make", [two_point_triple, two_point_real_triple, ko4_triple, ko6_triple])
def test_fixtures_pass(make):
    assert validate_triple(make()).passed


def test_grading_must_anticommute():
    t = FiniteSpectralTriple(two_point_triple().algebra_basis, np.diag([1.0, 2.0]), grading=SZ)
    assert validate_triple(t).failed == ["grading_anticommutes_dirac"]


def test_first_order_violation_detected():
    # full matrix algebra on C^2 x C^2 acting on the first factor, D acting on the second
    t = two_point_real_triple()
    basis = t.algebra_basis + (np.kron(SX, I2),)
    bad = FiniteSpectralTriple(basis, t.dirac, t.grading, t.real)
    rep = validate_triple(bad)
    assert not rep.passed


@given(seeds, st.floats(min_value=1e-6, max_value=1.0))
def test_residual_tracks_perturbation_exactly(seed, eps):
    rng = np.random.default_rng(seed)
    t = circle_truncation(4)
    H = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    P = eps * H
    rep = validate_triple(t.with_dirac(t.dirac + P), tol=0.0)
    assert rep["dirac_selfadjoint"].residual == pytest.approx(operator_norm(P - adjoint(P)), rel=1e-10, abs=1e-14)


def test_report_to_dict():
    d = validate_triple(two_point_triple()).to_dict()
    assert d["passed"] is True
    assert {c["name"] for c in d["checks"]} >= {"dirac_selfadjoint", "grading_involution"}


# ---------------------------------------------------------------------------
# products


def test_product_ko_4_6_gives_2():
    p = product_triple(ko4_triple(), ko6_triple())
    assert p.real.ko_dim == 2
    assert validate_triple(p).passed


def test_product_dimensions():
    t1 = diagonal_triple(np.zeros((4, 4)), grading=np.diag([1, -1, 1, -1]))
    t2 = circle_truncation(3)
    p = product_triple(t1, t2)
    assert p.hilbert_dim == 12
    assert len(p.algebra_basis) == 4 * 3


def test_product_requires_grading():
    with pytest.raises(MissingGrading):
        product_triple(circle_truncation(3), circle_truncation(3))


def test_product_of_real_two_point_triples():
    p = product_triple(two_point_real_triple(1.0), two_point_real_triple(0.5 + 0.5j))
    assert p.real.ko_dim == 0
    assert validate_triple(p).passed


@given(seeds)
def test_product_of_random_valid_triples_passes(seed):
    rng = np.random.default_rng(seed)
    m1 = complex(*rng.normal(size=2))
    m2 = complex(*rng.normal(size=2))
    p = product_triple(two_point_triple(m1), two_point_triple(m2))
    assert np.linalg.norm(p.dirac - adjoint(p.dirac)) <= 1e-12
    assert validate_triple(p).passed


# ---------------------------------------------------------------------------
# forms


def test_represent_low_degree(rng):
    t = two_point_triple(2.0)
    a = np.diag(rng.normal(size=2)).astype(complex)
    assert np.allclose(represent_form(t, UniversalFormWord.word(a)), a)
    one = np.eye(2)
    assert np.allclose(represent_form(t, UniversalFormWord.word(one, a)), commutator(t.dirac, a))


@pytest.mark.parametrize("m", [1.0, 2.0, 0.5 - 1.5j])
def test_two_point_f_df_formula(m):
    f1, f2 = 0.3, -1.7
    f = np.diag([f1, f2]).astype(complex)
    t = two_point_triple(m)
    got = represent_form(t, UniversalFormWord.word(f, f))
    expected = (f2 - f1) * f @ np.array([[0, m], [-np.conj(m), 0]])
    assert np.max(np.abs(got - expected)) <= 1e-14


@given(seeds)
def test_represent_form_is_linear(seed):
    rng = np.random.default_rng(seed)
    t = circle_position_triple(4)
    a = [np.diag(rng.normal(size=4) + 1j * rng.normal(size=4)) for _ in range(4)]
    c1, c2 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    w1 = UniversalFormWord.word(a[0], a[1], coef=c1)
    w2 = UniversalFormWord.word(a[2], a[3], coef=c2)
    lhs = represent_form(t, w1 + w2)
    rhs = c1 * represent_form(t, UniversalFormWord.word(a[0], a[1])) + c2 * represent_form(
        t, UniversalFormWord.word(a[2], a[3])
    )
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(lhs))


@given(seeds)
def test_represent_form_product_rule(seed):
    # (a0 da1)(b0 db1) = a0 d(a1 b0) db1 - a0 a1 db0 db1
    rng = np.random.default_rng(seed)
    t = circle_position_triple(5)
    a0, a1, b0, b1 = (np.diag(rng.normal(size=5) + 1j * rng.normal(size=5)) for _ in range(4))
    lhs = represent_form(t, UniversalFormWord.word(a0, a1)) @ represent_form(t, UniversalFormWord.word(b0, b1))
    w = UniversalFormWord(2, ((1.0, (a0, a1 @ b0, b1)), (-1.0, (a0 @ a1, b0, b1))))
    rhs = represent_form(t, w)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * max(1.0, np.linalg.norm(lhs))


def test_word_degree_checked():
    with pytest.raises(ValueError):
        UniversalFormWord(1, ((1.0, (I2,)),))


# ---------------------------------------------------------------------------
# junk


@pytest.mark.parametrize("p", [1, 2, 3])
def test_commuting_dirac_has_no_junk(p):
    t = diagonal_triple(np.diag([1.0, 2.0, 3.0]))
    assert junk_subspace(t, p).dimension == 0


def _exact_junk_dimension(m, f_diag):
    """Exact rational arithmetic: dim of pi(dK), K = ker pi on words (x, y), x, y in {1, f}."""
    m = sympy.Rational(m)
    D = sympy.Matrix([[0, m], [m, 0]])
    one = sympy.eye(2)
    f = sympy.diag(*[sympy.Rational(v) for v in f_diag])
    gens = [one, f]
    words = [(x, y) for x in gens for y in gens]

    def pi(word):
        acc = word[0]
        for a in word[1:]:
            acc = acc * (D * a - a * D)
        return acc

    R = sympy.Matrix.hstack(*[pi(w).reshape(4, 1) for w in words])
    Rd = sympy.Matrix.hstack(*[pi((one,) + w).reshape(4, 1) for w in words])
    K = R.nullspace()
    if not K:
        return 0
    return (Rd * sympy.Matrix.hstack(*K)).rank()


@pytest.mark.parametrize("m,f", [(1, (1, 0)), (2, (3, -1)), ("1/2", (2, 5))])
def test_two_point_junk_matches_exact_oracle(m, f):
    t = two_point_triple(float(sympy.Rational(m)))
    fm = np.diag([float(v) for v in f]).astype(complex)
    gens = [np.eye(2, dtype=complex), fm]
    words = [UniversalFormWord.word(x, y) for x in gens for y in gens]
    res = junk_subspace(t, 2, words)
    assert res.dimension == _exact_junk_dimension(m, f)
    for b in res.basis:
        assert np.linalg.norm(b) == pytest.approx(1.0)


def test_junk_basis_is_orthonormal():
    t = circle_position_triple(4)
    res = junk_subspace(t, 2)
    if res.dimension:
        G = np.array([[np.vdot(a, b) for b in res.basis] for a in res.basis])
        assert np.allclose(G, np.eye(res.dimension), atol=1e-10)


def test_commutator_form_not_junk_on_sampled_circle():
    t = circle_position_triple(8)
    f = np.diag(np.cos(2 * np.pi * np.arange(8) / 8) + 0.3 * np.sin(4 * np.pi * np.arange(8) / 8)).astype(complex)
    one = np.eye(8, dtype=complex)
    # f df - (df) f = 2 f df - d(f^2) as a universal form
    omega = UniversalFormWord(1, ((2.0, (f, f)), (-1.0, (one, f @ f))))
    pw = represent_form(t, omega)
    Df = commutator(t.dirac, f)
    assert np.allclose(pw, f @ Df - Df @ f)
    rep = junk_report(t, omega)
    assert rep.pi_norm > 1e-3
    assert not rep.in_kernel


def test_junk_rejects_bad_degree():
    t = two_point_triple()
    with pytest.raises(ValueError):
        junk_subspace(t, 0)
    with pytest.raises(ValueError):
        junk_subspace(t, 2, [UniversalFormWord.word(I2)])


# ---------------------------------------------------------------------------
# fluctuations and the spectral action


def test_zero_fluctuation():
    t = two_point_real_triple(1.3)
    assert np.array_equal(fluctuate_dirac(t, np.zeros((4, 4))), t.dirac)


def test_fluctuation_errors():
    with pytest.raises(NoRealStructure):
        fluctuate_dirac(two_point_triple(), np.zeros((2, 2)))
    with pytest.raises(NotHermitian):
        fluctuate_dirac(two_point_real_triple(), np.triu(np.ones((4, 4))))


def test_commutator_potential_keeps_dirac_hermitian():
    t = two_point_real_triple(0.7 + 0.2j)
    f = t.algebra_basis[0] * 0.4 - t.algebra_basis[1] * 1.1
    A = 0.8j * commutator(t.dirac, f)
    DA = fluctuate_dirac(t, A)
    assert np.linalg.norm(DA - adjoint(DA)) <= 1e-12
    assert one_form_residual(t, A) <= 1e-10


def test_gauge_covariance_over_random_unitaries(rng):
    t = two_point_real_triple(1.0 + 0.5j)
    A = hermitian_one_form(t, rng)
    worst = 0.0
    for _ in range(100):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=2))
        u = phases[0] * t.algebra_basis[0] + phases[1] * t.algebra_basis[1]
        U = gauge_unitary(t, u)
        lhs = U @ fluctuate_dirac(t, A) @ adjoint(U)
        rhs = fluctuate_dirac(t, gauge_transform_potential(t, u, A))
        worst = max(worst, operator_norm(lhs - rhs))
    assert worst <= 1e-8


def test_spectral_action_examples():
    t = diagonal_triple(np.diag([-2.0, 0.0, 1.0]))
    assert spectral_action(t, None, lambda x: (np.abs(x) <= 1).astype(float), 1.0) == 2.0
    t2 = diagonal_triple(np.diag([0.0, 1.0]))
    assert spectral_action(t2, None, lambda x: np.exp(-x**2), 1.0) == pytest.approx(1 + np.exp(-1), abs=1e-12)
    with pytest.raises(ValueError):
        spectral_action(t, None, np.abs, 0.0)


def test_spectral_action_square_is_trace(rng):
    t = two_point_real_triple(0.9)
    A = hermitian_one_form(t, rng)
    DA = fluctuate_dirac(t, A)
    assert spectral_action(t, A, np.square, 1.0) == pytest.approx(np.trace(DA @ DA).real, abs=1e-10)


@given(seeds)
def test_spectral_action_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    D = random_hermitian(rng, 5)
    U = random_unitary(rng, 5)
    f = lambda x: np.exp(-(x**2))  # noqa: E731
    a = spectral_action(diagonal_triple(D), None, f, 2.0)
    b = spectral_action(diagonal_triple(U @ D @ adjoint(U)), None, f, 2.0)
    assert a == pytest.approx(b, abs=1e-10)
