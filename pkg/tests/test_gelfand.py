import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectre.errors import NotCommutative, NotInAlgebra, NotPositive
from spectre.gelfand import (
    StateFunctional,
    characters,
    commutant_dimension,
    gelfand_transform,
    gns,
    is_irreducible,
    mix_states,
    points_to_algebra,
)
from spectre.numerics import adjoint, operator_norm

from conftest import random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)
SX = np.array([[0, 1], [1, 0]], dtype=complex)


def diagonal_basis(n):
    return [np.diag(e).astype(complex) for e in np.eye(n)]


def full_matrix_basis(n):
    out = []
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n), dtype=complex)
            E[i, j] = 1
            out.append(E)
    return out


def random_commutative_basis(rng, n, k):
    """Span of k random diagonal matrices conjugated by a common unitary."""
    U = random_unitary(rng, n)
    return [U @ np.diag(rng.normal(size=n) + 1j * rng.normal(size=n)) @ adjoint(U) for _ in range(k)], U


# ---------------------------------------------------------------------------
# characters


def test_diagonal_four_points():
    cs = characters(diagonal_basis(4))
    assert len(cs) == 4
    # each character evaluates one coordinate
    vals = np.abs(cs.values[:, :4])
    assert np.allclose(np.sort(vals, axis=1)[:, -1], 1.0)
    assert np.allclose(vals.sum(axis=1), 1.0)


def test_scalar_algebra_single_character():
    cs = characters([np.eye(3)])
    assert len(cs) == 1


def test_pauli_span_characters():
    cs = characters([np.eye(2), SX])
    got = sorted(cs.evaluate(k, SX).real for k in range(len(cs)))
    assert np.allclose(got, [-1.0, 1.0])


def test_non_commutative_rejected():
    with pytest.raises(NotCommutative):
        characters([np.eye(2), SX, np.diag([1.0, -1.0])])


def test_non_unital_algebra_drops_zero_character():
    cs = characters([np.diag([1.0, 0.0, 0.0]).astype(complex)])
    assert cs.unitized
    assert len(cs) == 1


@given(seeds, st.integers(min_value=2, max_value=5), st.integers(min_value=1, max_value=3))
def test_characters_multiplicative_and_star(seed, n, k):
    rng = np.random.default_rng(seed)
    basis, _ = random_commutative_basis(rng, n, k)
    cs = characters(basis)
    for c in range(len(cs)):
        for a in basis:
            assert abs(cs.evaluate(c, adjoint(a)) - np.conj(cs.evaluate(c, a))) <= 1e-8
            for b in basis:
                assert abs(cs.evaluate(c, a @ b) - cs.evaluate(c, a) * cs.evaluate(c, b)) <= 1e-8 * max(
                    1.0, operator_norm(a) * operator_norm(b)
                )


@given(st.lists(st.integers(min_value=-3, max_value=3), min_size=2, max_size=6, unique=True))
def test_points_round_trip(coords):
    # distinct points on a line: the unital algebra of coordinate functions
    # has one character per point
    pts = np.array(coords, dtype=float)
    basis = points_to_algebra(np.vstack([pts, pts**2, np.ones_like(pts)]))
    cs = characters(basis)
    assert len(cs) == len(pts)
    got = sorted(cs.evaluate(k, basis[0]).real for k in range(len(cs)))
    assert np.allclose(got, sorted(pts))


# ---------------------------------------------------------------------------
# Gel'fand transform


def test_transform_of_identity():
    cs = characters(diagonal_basis(3))
    assert np.allclose(gelfand_transform(np.eye(3), cs), 1.0)


def test_transform_two_points():
    cs = characters(diagonal_basis(2))
    a = np.diag([2.0, -3.0])
    ah = gelfand_transform(a, cs)
    assert sorted(ah.real) == pytest.approx([-3.0, 2.0])
    assert np.max(np.abs(ah)) == pytest.approx(operator_norm(a))


def test_transform_off_algebra():
    cs = characters(diagonal_basis(2))
    with pytest.raises(NotInAlgebra):
        gelfand_transform(SX, cs)


@given(seeds, st.integers(min_value=2, max_value=6))
def test_transform_is_isometric_on_normal_elements(seed, n):
    rng = np.random.default_rng(seed)
    basis, U = random_commutative_basis(rng, n, n)
    cs = characters(basis)
    a = sum(complex(*rng.normal(size=2)) * b for b in basis)
    assert abs(np.max(np.abs(gelfand_transform(a, cs))) - operator_norm(a)) <= 1e-8 * max(1.0, operator_norm(a))


@given(seeds)
def test_transform_is_star_homomorphism(seed):
    rng = np.random.default_rng(seed)
    basis, _ = random_commutative_basis(rng, 4, 4)
    cs = characters(basis)
    a = sum(complex(*rng.normal(size=2)) * b for b in basis)
    b = sum(complex(*rng.normal(size=2)) * c for c in basis)
    lhs = gelfand_transform(adjoint(a) @ b, cs)
    rhs = np.conj(gelfand_transform(a, cs)) * gelfand_transform(b, cs)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * max(1.0, np.max(np.abs(rhs)))


# ---------------------------------------------------------------------------
# states and GNS


def test_density_state_validation():
    with pytest.raises(NotPositive):
        StateFunctional.from_density(np.diag([1.5, -0.5]))
    with pytest.raises(NotPositive):
        StateFunctional.from_density(np.diag([0.5, 0.4]))


def test_gns_of_character_is_one_dimensional():
    basis = diagonal_basis(2)
    cs = characters(basis)
    phi = StateFunctional.pure(cs, 0)
    rep = gns(basis, phi)
    assert rep.dim == 1
    a = np.diag([0.7, -2.0]).astype(complex)
    assert rep.represent(a)[0, 0] == pytest.approx(phi(a))
    assert is_irreducible(rep.matrices)


def test_gns_of_even_mixture():
    basis = diagonal_basis(2)
    cs = characters(basis)
    phi = StateFunctional.from_weights(cs, [0.5, 0.5])
    rep = gns(basis, phi)
    assert rep.dim == 2
    # the class of 1 has unit norm and equal weight on both points
    assert np.linalg.norm(rep.cyclic_vector) == pytest.approx(1.0)
    a = np.diag([1.0, 0.0]).astype(complex)
    assert abs(np.vdot(rep.cyclic_vector, rep.represent(a) @ rep.cyclic_vector)) == pytest.approx(0.5)
    assert not is_irreducible(rep.matrices)


def test_gns_full_matrix_algebra_reproduces_state():
    basis = full_matrix_basis(2)
    phi = StateFunctional.from_density(np.diag([1.0, 0.0]))
    rep = gns(basis, phi)
    for a in basis + [SX, np.array([[1, 2j], [3, -1]])]:
        val = np.vdot(rep.cyclic_vector, rep.represent(a) @ rep.cyclic_vector)
        assert abs(val - phi(a)) <= 1e-10
    assert is_irreducible(rep.matrices)


def test_gns_rejects_non_positive():
    basis = diagonal_basis(2)
    phi = StateFunctional.from_values(basis, [1.5, -0.5])
    with pytest.raises(NotPositive):
        gns(basis, phi)


@given(seeds, st.integers(min_value=2, max_value=4))
def test_gns_reproduction_random_density(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = X @ adjoint(X)
    rho /= np.trace(rho).real
    basis = full_matrix_basis(n)
    phi = StateFunctional.from_density(rho)
    rep = gns(basis, phi)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert abs(np.vdot(rep.cyclic_vector, rep.represent(a) @ rep.cyclic_vector) - phi(a)) <= 1e-8
    # a faithful state on M_n gives n copies of the defining representation
    assert rep.dim == n * n


@given(seeds, st.integers(min_value=2, max_value=5))
def test_pure_irreducible_and_mixture_reducible(seed, n):
    rng = np.random.default_rng(seed)
    basis = diagonal_basis(n)
    cs = characters(basis)
    k = int(rng.integers(n))
    assert is_irreducible(gns(basis, StateFunctional.pure(cs, k)).matrices)
    w = rng.dirichlet(np.ones(n))
    assert not is_irreducible(gns(basis, StateFunctional.from_weights(cs, w)).matrices)


@given(seeds)
def test_convex_combination_is_a_state(seed):
    rng = np.random.default_rng(seed)
    basis = full_matrix_basis(3)
    states = []
    for _ in range(3):
        X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho = X @ adjoint(X)
        states.append(StateFunctional.from_density(rho / np.trace(rho).real))
    phi = mix_states(states, rng.dirichlet(np.ones(3)))
    assert phi(np.eye(3)) == pytest.approx(1.0)
    assert phi.positivity_residual(basis, rng) <= 1e-10


# ---------------------------------------------------------------------------
# Schur test


def test_defining_rep_irreducible():
    assert is_irreducible(full_matrix_basis(2))


def test_doubled_one_dimensional_rep():
    reps = [np.eye(2), 3.0 * np.eye(2)]
    assert commutant_dimension(reps) == 4
    assert not is_irreducible(reps)
