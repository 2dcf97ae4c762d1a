"""Gel'fand theory and the GNS construction for finite-dimensional *-algebras.

Algebras are given by a finite basis of square matrices whose span is closed
under products and adjoints.  Characters of a commutative algebra are read
off a simultaneous unitary diagonalization; states are represented either by
a density matrix or by their values on the basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotCommutative, NotInAlgebra, NotPositive
from .numerics import adjoint, commutator, operator_norm

MERGE_TOL = 1e-8
COMMUTE_TOL = 1e-10
GRAM_CUTOFF = 1e-10
SPAN_RTOL = 1e-9


def _span(basis: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([np.asarray(b, dtype=complex).ravel() for b in basis], axis=1)


def span_coordinates(basis: Sequence[np.ndarray], a: np.ndarray, rtol: float = SPAN_RTOL) -> np.ndarray:
    """Coefficients of ``a`` in the basis; raises ``NotInAlgebra`` off the span."""
    S = _span(basis)
    v = np.asarray(a, dtype=complex).ravel()
    coef, *_ = np.linalg.lstsq(S, v, rcond=None)
    nv = np.linalg.norm(v)
    if nv > 0 and np.linalg.norm(S @ coef - v) > rtol * nv:
        raise NotInAlgebra("element does not lie in the algebra span")
    return coef


def unitize(basis: Sequence[np.ndarray]) -> tuple:
    """Return ``(basis', added)`` where ``basis'`` spans the algebra plus the identity."""
    basis = [np.asarray(b, dtype=complex) for b in basis]
    one = np.eye(basis[0].shape[0], dtype=complex)
    try:
        span_coordinates(basis, one)
        return tuple(basis), False
    except NotInAlgebra:
        return tuple(basis) + (one,), True


def _split(V: np.ndarray, h: np.ndarray, tol: float) -> list:
    """Split the columns of V into eigenspaces of the compression of h."""
    hc = adjoint(V) @ h @ V
    hc = 0.5 * (hc + adjoint(hc))
    vals, vecs = np.linalg.eigh(hc)
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            groups.append(V @ vecs[:, start:i])
            start = i
    return groups


@dataclass(frozen=True, eq=False)
class CharacterSet:
    """Characters of a commutative algebra.

    Attributes
    ----------
    values : ndarray, shape (n_characters, n_basis)
        ``values[k, i] = chi_k(basis[i])``.
    projectors : tuple of ndarray
        Spectral projector of each joint eigenspace.
    unitary : ndarray
        Columns are the joint eigenvectors, grouped by character.
    basis : tuple of ndarray
        The algebra basis (including an added identity if it was unitized).
    """

    values: np.ndarray
    projectors: tuple
    unitary: np.ndarray
    basis: tuple
    unitized: bool = False

    def __len__(self) -> int:
        return self.values.shape[0]

    def evaluate(self, k: int, a: np.ndarray) -> complex:
        P = self.projectors[k]
        return complex(np.trace(P @ a) / np.trace(P).real)


def check_commutative(basis: Sequence[np.ndarray], tol: float = COMMUTE_TOL) -> float:
    worst = 0.0
    scale = max(operator_norm(b) for b in basis) or 1.0
    for i, a in enumerate(basis):
        for b in basis[i + 1 :]:
            worst = max(worst, operator_norm(commutator(a, b)))
    if worst > tol * scale**2:
        raise NotCommutative(f"basis elements fail to commute (residual {worst:.3e})")
    return worst


def characters(basis: Sequence[np.ndarray], tol: float = MERGE_TOL) -> CharacterSet:
    """All characters of the commutative *-algebra spanned by ``basis``.

    Joint eigenspaces come from successive splitting by the Hermitian and
    anti-Hermitian parts of each basis element; eigenvalues closer than
    ``tol`` (relative to the element's norm) share a joint eigenspace.  A
    non-unital algebra is unitized first and the character vanishing on the
    original algebra is dropped.
    """
    basis = [np.asarray(b, dtype=complex) for b in basis]
    check_commutative(basis)
    full, added = unitize(basis)
    n = full[0].shape[0]
    spaces = [np.eye(n, dtype=complex)]
    for a in full:
        for h in (0.5 * (a + adjoint(a)), -0.5j * (a - adjoint(a))):
            scale = max(operator_norm(h), 1.0)
            spaces = [g for V in spaces for g in _split(V, h, tol * scale)]
    projectors, rows, blocks = [], [], []
    orig = basis
    for V in spaces:
        P = V @ adjoint(V)
        r = np.array([np.trace(P @ a) / V.shape[1] for a in full])
        if added and np.all(np.abs(r[: len(orig)]) <= tol * max(1.0, max(operator_norm(a) for a in orig))):
            continue  # the zero functional on the original algebra
        rows.append(r)
        projectors.append(P)
        blocks.append(V)
    # merge classes whose values agree on the whole basis
    merged_rows, merged_P, merged_V = [], [], []
    for r, P, V in zip(rows, projectors, blocks):
        for j, r2 in enumerate(merged_rows):
            if np.max(np.abs(r - r2)) <= tol * max(1.0, np.max(np.abs(r))):
                merged_P[j] = merged_P[j] + P
                merged_V[j] = np.hstack([merged_V[j], V])
                break
        else:
            merged_rows.append(r)
            merged_P.append(P)
            merged_V.append(V)
    U = np.hstack(merged_V) if merged_V else np.zeros((n, 0), dtype=complex)
    return CharacterSet(np.array(merged_rows), tuple(merged_P), U, tuple(full), added)


def gelfand_transform(a: np.ndarray, cs: CharacterSet) -> np.ndarray:
    """``a_hat(chi) = chi(a)`` for every character."""
    coef = span_coordinates(cs.basis, a)
    return cs.values @ coef


def points_to_algebra(values: np.ndarray) -> list:
    """Diagonal algebra generated by functions on points (rows of ``values``)."""
    values = np.atleast_2d(np.asarray(values, dtype=complex))
    return [np.diag(v) for v in values]


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class StateFunctional:
    """A linear functional on the algebra.

    Exactly one representation is used: a density matrix ``rho`` with
    ``phi(a) = tr(rho a)``, or ``basis_values`` giving ``phi`` on each
    element of ``basis`` (extended linearly).  ``weights`` records the
    character mixture when the state was built from characters.
    """

    rho: np.ndarray | None = None
    basis: tuple | None = None
    basis_values: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __call__(self, a: np.ndarray) -> complex:
        if self.rho is not None:
            return complex(np.trace(self.rho @ a))
        coef = span_coordinates(self.basis, a)
        return complex(self.basis_values @ coef)

    @classmethod
    def from_density(cls, rho: np.ndarray, tol: float = 1e-10) -> "StateFunctional":
        rho = np.asarray(rho, dtype=complex)
        if np.linalg.norm(rho - adjoint(rho)) > tol:
            raise NotPositive("density matrix is not Hermitian")
        ev = np.linalg.eigvalsh(0.5 * (rho + adjoint(rho)))
        if ev.min() < -tol or abs(ev.sum() - 1) > 1e-8:
            raise NotPositive("density matrix must be positive with unit trace")
        return cls(rho=rho)

    @classmethod
    def from_weights(cls, cs: CharacterSet, weights) -> "StateFunctional":
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(cs),) or np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-10:
            raise NotPositive("weights must be nonnegative and sum to 1")
        rho = sum(wk * P / np.trace(P).real for wk, P in zip(w, cs.projectors))
        return cls(rho=rho, weights=w)

    @classmethod
    def pure(cls, cs: CharacterSet, k: int) -> "StateFunctional":
        w = np.zeros(len(cs))
        w[k] = 1.0
        return cls.from_weights(cs, w)

    @classmethod
    def from_values(cls, basis: Sequence[np.ndarray], values) -> "StateFunctional":
        return cls(basis=tuple(np.asarray(b, dtype=complex) for b in basis),
                   basis_values=np.asarray(values, dtype=complex))

    def positivity_residual(self, basis: Sequence[np.ndarray], rng: np.random.Generator, samples: int = 100) -> float:
        """``-min phi(a* a)`` over random ``a`` in the span (<= 0 when positive)."""
        worst = -np.inf
        for _ in range(samples):
            c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
            a = sum(ci * b for ci, b in zip(c, basis))
            worst = max(worst, -self(adjoint(a) @ a).real)
        return float(worst)


def mix_states(states: Sequence[StateFunctional], weights) -> StateFunctional:
    """Convex combination of density-represented states."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
        raise NotPositive("mixing weights must be a probability vector")
    if any(s.rho is None for s in states):
        raise ValueError("mixing needs density representations")
    return StateFunctional(rho=sum(wi * s.rho for wi, s in zip(w, states)))


# ---------------------------------------------------------------------------
# GNS


@dataclass(frozen=True, eq=False)
class GNSRepresentation:
    """Cyclic representation built from a state.

    ``matrices[i]`` represents ``basis[i]``; ``cyclic_vector`` is the class
    of the identity.
    """

    basis: tuple
    matrices: tuple
    cyclic_vector: np.ndarray
    state: StateFunctional
    _W: np.ndarray

    @property
    def dim(self) -> int:
        return self.cyclic_vector.size

    def represent(self, a: np.ndarray) -> np.ndarray:
        return _gns_matrix(self.basis, self.state, self._W, a)


def _gns_matrix(basis, phi, W, a):
    m = len(basis)
    M = np.empty((m, m), dtype=complex)
    for i, bi in enumerate(basis):
        left = adjoint(bi) @ a
        for j, bj in enumerate(basis):
            M[i, j] = phi(left @ bj)
    return adjoint(W) @ M @ W


def gns(basis: Sequence[np.ndarray], phi: StateFunctional, cutoff: float = GRAM_CUTOFF) -> GNSRepresentation:
    """GNS representation of ``phi`` on the algebra spanned by ``basis``.

    The Gram matrix ``G_ij = phi(b_i* b_j)`` is diagonalized and eigenvalues
    below ``cutoff`` are treated as the null space.

    Raises
    ------
    NotPositive
        If ``G`` has an eigenvalue below ``-cutoff`` or ``phi(1) != 1``.
    """
    full, _ = unitize(basis)
    m = len(full)
    G = np.empty((m, m), dtype=complex)
    for i, bi in enumerate(full):
        for j, bj in enumerate(full):
            G[i, j] = phi(adjoint(bi) @ bj)
    G = 0.5 * (G + adjoint(G))
    lam, V = np.linalg.eigh(G)
    if lam.min(initial=0.0) < -cutoff * max(1.0, lam.max(initial=0.0)):
        raise NotPositive(f"state is not positive (Gram eigenvalue {lam.min():.3e})")
    one = np.eye(full[0].shape[0], dtype=complex)
    if abs(phi(one) - 1) > 1e-8:
        raise NotPositive("state is not normalized")
    keep = lam > cutoff
    W = V[:, keep] / np.sqrt(lam[keep])
    xi = adjoint(W) @ np.array([phi(adjoint(b)) for b in full])
    mats = tuple(_gns_matrix(full, phi, W, b) for b in full)
    return GNSRepresentation(full, mats, xi, phi, W)


def commutant_dimension(matrices: Sequence[np.ndarray], rtol: float = 1e-8) -> int:
    """Dimension of ``{X : X A = A X for all A}``."""
    mats = [np.asarray(A, dtype=complex) for A in matrices]
    n = mats[0].shape[0]
    if n == 0:
        return 0
    eye = np.eye(n)
    # row-major vec: vec(A X) = (A x I) vec X,  vec(X A) = (I x A^T) vec X
    L = np.vstack([np.kron(A, eye) - np.kron(eye, A.T) for A in mats])
    s = np.linalg.svd(L, compute_uv=False)
    scale = max(s[0] if s.size else 0.0, 1.0)
    return int(n * n - np.sum(s > rtol * scale))


def is_irreducible(matrices: Sequence[np.ndarray], rtol: float = 1e-8) -> bool:
    """Schur test: the commutant consists of scalars only."""
    return commutant_dimension(matrices, rtol) == 1
