"""Finite spectral triples and their algebraic operations.

A triple is a finite basis of matrices spanning the algebra, a Hermitian
Dirac matrix, and optionally a grading and a real structure.  The real
structure is antilinear and stored as a matrix ``C`` with ``J = C K`` where
``K`` is entrywise complex conjugation, so for any matrix ``X``

    J X J^{-1} = C conj(X) C^{-1},      J^2 = C conj(C).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import MissingGrading, NoRealStructure, NotHermitian
from .numerics import adjoint, as_operator, commutator, hermitian_eig, hermiticity_residual, operator_norm

SPAN_RTOL = 1e-9
RANK_RTOL = 1e-8

# (epsilon, epsilon', epsilon'') indexed by KO-dimension; None marks an absent sign
_KO_TABLE = {
    0: (1, 1, 1),
    1: (1, -1, None),
    2: (-1, 1, -1),
    3: (-1, 1, None),
    4: (-1, 1, 1),
    5: (-1, -1, None),
    6: (1, 1, -1),
    7: (1, 1, None),
}


class KOSigns(NamedTuple):
    epsilon: int
    epsilon_prime: int
    epsilon_dprime: int | None


def ko_signs(n: int) -> KOSigns:
    """Signs ``(J^2 = e, JD = e' DJ, J gamma = e'' gamma J)`` for KO-dimension ``n``."""
    if int(n) != n or not 0 <= n <= 7:
        raise ValueError(f"KO-dimension must be an integer in 0..7, got {n}")
    return KOSigns(*_KO_TABLE[int(n)])


@dataclass(frozen=True, eq=False)
class RealStructure:
    """Antiunitary ``J = C K`` with its KO-dimension."""

    j_matrix: np.ndarray
    ko_dim: int

    def __post_init__(self):
        object.__setattr__(self, "j_matrix", as_operator(self.j_matrix))
        object.__setattr__(self, "ko_dim", int(self.ko_dim) % 8)

    def conjugate(self, x: np.ndarray) -> np.ndarray:
        """``J x J^{-1}``."""
        C = self.j_matrix
        return C @ np.conj(x) @ np.linalg.inv(C)

    def opposite(self, b: np.ndarray) -> np.ndarray:
        """``b^o = J b* J^{-1} = C b^T C^{-1}``."""
        C = self.j_matrix
        return C @ np.asarray(b).T @ np.linalg.inv(C)

    def square(self) -> np.ndarray:
        C = self.j_matrix
        return C @ np.conj(C)


@dataclass(frozen=True, eq=False)
class FiniteSpectralTriple:
    """``(A, H, D, gamma, J)`` in finite dimension.

    Construction checks shapes only; use ``validate_triple`` for the axioms.
    """

    algebra_basis: tuple
    dirac: np.ndarray
    grading: np.ndarray | None = None
    real: RealStructure | None = None
    unital: bool = True

    def __post_init__(self):
        D = as_operator(self.dirac)
        n = D.shape[0]
        basis = tuple(as_operator(a) for a in self.algebra_basis)
        if not basis:
            raise ValueError("algebra basis is empty")
        for a in basis:
            if a.shape != (n, n):
                raise ValueError("algebra element and Dirac operator dimensions differ")
        object.__setattr__(self, "dirac", D)
        object.__setattr__(self, "algebra_basis", basis)
        if self.grading is not None:
            g = as_operator(self.grading)
            if g.shape != (n, n):
                raise ValueError("grading has the wrong dimension")
            object.__setattr__(self, "grading", g)
        if self.real is not None and self.real.j_matrix.shape != (n, n):
            raise ValueError("real structure has the wrong dimension")

    @property
    def hilbert_dim(self) -> int:
        return self.dirac.shape[0]

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.hilbert_dim, dtype=complex)

    def with_dirac(self, D: np.ndarray) -> "FiniteSpectralTriple":
        return FiniteSpectralTriple(self.algebra_basis, D, self.grading, self.real, self.unital)

    def span_matrix(self) -> np.ndarray:
        return np.stack([a.ravel() for a in self.algebra_basis], axis=1)

    def span_residual(self, a: np.ndarray) -> float:
        """Relative least-squares distance of ``a`` from the algebra span."""
        return span_residual(self.span_matrix(), a)

    def in_algebra(self, a: np.ndarray, rtol: float = SPAN_RTOL) -> bool:
        return self.span_residual(a) <= rtol

    def hermitian_basis(self) -> list:
        """Real basis of the Hermitian part of the algebra span."""
        return hermitian_basis(self.algebra_basis)


def span_residual(S: np.ndarray, a: np.ndarray) -> float:
    v = np.asarray(a, dtype=complex).ravel()
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    coef, *_ = np.linalg.lstsq(S, v, rcond=None)
    return float(np.linalg.norm(S @ coef - v) / nv)


def orthonormal_columns(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    if M.size == 0 or M.shape[1] == 0:
        return M[:, :0]
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    return U[:, s > rtol * s[0]]


def hermitian_basis(basis: Sequence[np.ndarray]) -> list:
    """Real basis of ``{a in span : a* = a}`` from the Hermitian and anti-Hermitian parts."""
    gens = []
    for a in basis:
        gens.append(0.5 * (a + adjoint(a)))
        gens.append(0.5j * (a - adjoint(a)))
    # real coordinates of Hermitian matrices: stack real and imaginary parts
    n = gens[0].shape[0]
    R = np.stack([np.concatenate([g.real.ravel(), g.imag.ravel()]) for g in gens], axis=1)
    Q = orthonormal_columns(R)
    out = []
    for j in range(Q.shape[1]):
        v = Q[:, j]
        h = (v[: n * n] + 1j * v[n * n :]).reshape(n, n)
        out.append(0.5 * (h + adjoint(h)))
    return out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    residual: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list:
        return [c.name for c in self.checks]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "residual": c.residual, "passed": c.passed, "note": c.note}
                for c in self.checks
            ],
        }


def _check(name, residual, tol, note=""):
    residual = float(residual)
    return AxiomCheck(name, residual, bool(residual <= tol), note)


def validate_triple(t: FiniteSpectralTriple, tol: float = 1e-8) -> ValidationReport:
    """Residual of every axiom that applies to ``t``; pass iff residual <= tol."""
    D = t.dirac
    basis = t.algebra_basis
    one = t.identity
    checks = [_check("dirac_selfadjoint", hermiticity_residual(D), tol)]

    S = t.span_matrix()
    star = max(span_residual(S, adjoint(a)) for a in basis)
    checks.append(_check("algebra_star_closed", star, tol))
    if t.unital:
        checks.append(_check("algebra_unital", span_residual(S, one), tol))
    checks.append(AxiomCheck("compact_resolvent", 0.0, True, "trivially satisfied (finite dimension)"))
    bound = max(operator_norm(commutator(D, a)) for a in basis)
    checks.append(AxiomCheck("bounded_commutators", 0.0, True, f"max ||[D,a]|| = {bound:.6g}"))

    g = t.grading
    if g is not None:
        checks.append(_check("grading_involution", operator_norm(g @ g - one), tol))
        checks.append(_check("grading_selfadjoint", hermiticity_residual(g), tol))
        checks.append(_check("grading_commutes_algebra", max(operator_norm(commutator(g, a)) for a in basis), tol))
        checks.append(_check("grading_anticommutes_dirac", operator_norm(g @ D + D @ g), tol))

    r = t.real
    if r is not None:
        eps, eps1, eps2 = ko_signs(r.ko_dim)
        C = r.j_matrix
        checks.append(_check("real_antiunitary", operator_norm(adjoint(C) @ C - one), tol))
        checks.append(_check("real_J_squared", operator_norm(r.square() - eps * one), tol, f"epsilon = {eps}"))
        checks.append(
            _check("real_JD", operator_norm(C @ np.conj(D) - eps1 * D @ C), tol, f"epsilon' = {eps1}")
        )
        if eps2 is not None and g is not None:
            checks.append(
                _check("real_Jgamma", operator_norm(C @ np.conj(g) - eps2 * g @ C), tol, f"epsilon'' = {eps2}")
            )
        opp = [r.opposite(b) for b in basis]
        comms = [commutator(D, a) for a in basis]
        zero = max(operator_norm(commutator(a, bo)) for a in basis for bo in opp)
        first = max(operator_norm(commutator(da, bo)) for da in comms for bo in opp)
        checks.append(_check("order_zero", zero, tol))
        checks.append(_check("first_order", first, tol))
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# products


def product_triple(t1: FiniteSpectralTriple, t2: FiniteSpectralTriple) -> FiniteSpectralTriple:
    """Product geometry ``D = D1 x 1 + gamma1 x D2`` on ``H1 x H2``.

    The grading is ``gamma1 x gamma2`` when both are even; the real structure
    is ``J1 x J2`` with KO-dimension ``k1 + k2 mod 8`` when both are real.
    """
    if t1.grading is None:
        raise MissingGrading("the first factor of a product must carry a grading")
    n2 = t2.hilbert_dim
    basis = tuple(np.kron(a, b) for a in t1.algebra_basis for b in t2.algebra_basis)
    D = np.kron(t1.dirac, np.eye(n2)) + np.kron(t1.grading, t2.dirac)
    g = np.kron(t1.grading, t2.grading) if t2.grading is not None else None
    real = None
    if t1.real is not None and t2.real is not None:
        real = RealStructure(np.kron(t1.real.j_matrix, t2.real.j_matrix), (t1.real.ko_dim + t2.real.ko_dim) % 8)
    return FiniteSpectralTriple(basis, D, g, real, t1.unital and t2.unital)


# ---------------------------------------------------------------------------
# differential forms


@dataclass(frozen=True)
class UniversalFormWord:
    """Linear combination of words ``a0 da1 ... dap``.

    ``terms`` is a sequence of ``(coefficient, (a0, ..., ap))`` pairs; every
    word has length ``degree + 1``.
    """

    degree: int
    terms: tuple

    def __post_init__(self):
        terms = []
        for coef, word in self.terms:
            word = tuple(np.asarray(a, dtype=complex) for a in word)
            if len(word) != self.degree + 1:
                raise ValueError(f"word of length {len(word)} in a degree-{self.degree} form")
            terms.append((complex(coef), word))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def word(cls, *entries, coef: complex = 1.0) -> "UniversalFormWord":
        return cls(len(entries) - 1, ((coef, tuple(entries)),))

    def __add__(self, other: "UniversalFormWord") -> "UniversalFormWord":
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        return UniversalFormWord(self.degree, self.terms + other.terms)

    def scale(self, c: complex) -> "UniversalFormWord":
        return UniversalFormWord(self.degree, tuple((c * k, w) for k, w in self.terms))

    def differential(self) -> "UniversalFormWord":
        """``d(a0 da1 ... dap) = 1 da0 da1 ... dap``."""
        terms = []
        for coef, word in self.terms:
            one = np.eye(word[0].shape[0], dtype=complex)
            terms.append((coef, (one,) + word))
        return UniversalFormWord(self.degree + 1, tuple(terms))


def represent_form(t: FiniteSpectralTriple, w: UniversalFormWord) -> np.ndarray:
    """``pi(a0 da1 ... dap) = a0 [D,a1] ... [D,ap]`` summed over terms."""
    D = t.dirac
    out = np.zeros_like(D)
    for coef, word in w.terms:
        acc = word[0]
        for a in word[1:]:
            acc = acc @ commutator(D, a)
        out = out + coef * acc
    return out


def default_generator_words(t: FiniteSpectralTriple, degree: int) -> list:
    """All single words of the given degree over the algebra basis."""
    return [UniversalFormWord(degree, ((1.0, w),)) for w in itertools.product(t.algebra_basis, repeat=degree + 1)]


@dataclass(frozen=True)
class JunkResult:
    basis: tuple
    kernel_dim: int
    generator_count: int

    @property
    def dimension(self) -> int:
        return len(self.basis)


def junk_subspace(t: FiniteSpectralTriple, p: int, generator_words: Sequence[UniversalFormWord] | None = None,
                  rtol: float = RANK_RTOL) -> JunkResult:
    """Orthonormal basis of ``pi(d K)`` for ``K`` the kernel of ``pi`` on the generators.

    The generators are forms of degree ``p - 1``; a combination with
    singular value below ``rtol`` times the largest counts as in the kernel.
    """
    if p < 1:
        raise ValueError("junk forms start in degree 1")
    gens = list(generator_words) if generator_words is not None else default_generator_words(t, p - 1)
    if not gens:
        return JunkResult((), 0, 0)
    for w in gens:
        if w.degree != p - 1:
            raise ValueError(f"generator of degree {w.degree}; expected {p - 1}")
    n = t.hilbert_dim
    R = np.stack([represent_form(t, w).ravel() for w in gens], axis=1)
    Rd = np.stack([represent_form(t, w.differential()).ravel() for w in gens], axis=1)
    _, s, Vh = np.linalg.svd(R, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    K = np.conj(Vh[rank:]).T  # columns span the kernel
    if K.shape[1] == 0:
        return JunkResult((), 0, len(gens))
    J = Rd @ K
    scale = max(np.linalg.norm(Rd, axis=0).max(initial=0.0), 1e-300)
    U, sj, _ = np.linalg.svd(J, full_matrices=False)
    keep = sj > rtol * scale
    basis = tuple(U[:, i].reshape(n, n) for i in np.nonzero(keep)[0])
    return JunkResult(basis, K.shape[1], len(gens))


@dataclass(frozen=True)
class FormReport:
    pi_norm: float
    d_pi_norm: float
    in_kernel: bool


def junk_report(t: FiniteSpectralTriple, w: UniversalFormWord, rtol: float = RANK_RTOL) -> FormReport:
    """Whether ``w`` lies in ker(pi), and the size of ``pi(w)`` and ``pi(dw)``.

    ``rtol`` is relative to the largest term norm of the form.
    """
    pw = represent_form(t, w)
    pdw = represent_form(t, w.differential())
    scale = max(
        (abs(c) * np.linalg.norm(represent_form(t, UniversalFormWord(w.degree, ((1.0, word),)))) for c, word in w.terms),
        default=0.0,
    )
    pn = float(np.linalg.norm(pw))
    return FormReport(pn, float(np.linalg.norm(pdw)), bool(pn <= rtol * max(scale, 1e-300)))


# ---------------------------------------------------------------------------
# fluctuations and spectral action


def _require_real(t: FiniteSpectralTriple) -> RealStructure:
    if t.real is None:
        raise NoRealStructure("inner fluctuations need a real structure")
    return t.real


def fluctuate_dirac(t: FiniteSpectralTriple, A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """``D_A = D + A + e' J A J^{-1}`` for a Hermitian one-form ``A``."""
    r = _require_real(t)
    A = as_operator(A)
    if hermiticity_residual(A) > tol * max(1.0, operator_norm(A)):
        raise NotHermitian("the gauge potential must be Hermitian")
    eps1 = ko_signs(r.ko_dim).epsilon_prime
    return t.dirac + A + eps1 * r.conjugate(A)


def gauge_unitary(t: FiniteSpectralTriple, u: np.ndarray) -> np.ndarray:
    """``U = u J u J^{-1}``, the action of a unitary of the algebra on ``H``."""
    r = _require_real(t)
    return u @ r.conjugate(u)


def gauge_transform_potential(t: FiniteSpectralTriple, u: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``A' = u [D, u*] + u A u*``."""
    us = adjoint(u)
    return u @ commutator(t.dirac, us) + u @ A @ us


def one_form_residual(t: FiniteSpectralTriple, A: np.ndarray) -> float:
    """Relative distance of ``A`` from the span of ``a [D, b]`` over basis pairs."""
    S = np.stack([(a @ commutator(t.dirac, b)).ravel() for a in t.algebra_basis for b in t.algebra_basis], axis=1)
    return span_residual(S, A)


def spectral_action(t: FiniteSpectralTriple, A: np.ndarray | None, f: Callable, cutoff: float) -> float:
    """``tr f(D_A / cutoff)``, summed over the eigenvalues of ``D_A``.

    With ``A`` None the bare Dirac operator is used and no real structure is
    needed.
    """
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    DA = t.dirac if A is None else fluctuate_dirac(t, A)
    lam = hermitian_eig(DA).values / cutoff
    vals = np.asarray(f(lam), dtype=float)
    if vals.shape != lam.shape:
        vals = np.array([float(f(x)) for x in lam])
    return float(np.sum(vals))
