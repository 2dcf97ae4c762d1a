"""Krein-space structures and residual checks for temporal Lorentzian triples.

A fundamental symmetry ``J`` (``J* = J``, ``J^2 = 1``) turns the carrier
space into a Krein space with indefinite product ``<u, v>_J = (u, J v)``.
The Euclidean product of the carrier is taken to be the positive product
associated with ``J``, so ``D^dagger`` (ordinary adjoint) is the adjoint for
that Hilbert structure and ``J D^dagger J`` is the Krein adjoint.

A temporal triple adds a Hermitian time operator ``T``.  The commutator
``[D, T]`` should be a fundamental symmetry, up to a fixed phase
``J = phase [D, T]`` with ``phase in {1, -1, i, -i}`` (which phase is natural
depends on the gamma-matrix convention).  Because ``[D, T]`` is traceless
in finite dimension while a fundamental symmetry with a definite split is
not, the axioms cannot hold exactly; the validator reports residual norms,
optionally compressed to a low-frequency band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidSymmetry
from .numerics import adjoint, as_operator, commutator, hermiticity_residual, matrix_function, operator_norm
from .spectral_triple import AxiomCheck, FiniteSpectralTriple, ValidationReport

SYMMETRY_TOL = 1e-10
PHASES = (1, -1, 1j, -1j)


@dataclass(frozen=True, eq=False)
class KreinStructure:
    J: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "J", as_operator(self.J))

    def residuals(self) -> dict:
        J = self.J
        return {
            "selfadjoint": hermiticity_residual(J),
            "involution": operator_norm(J @ J - np.eye(J.shape[0])),
        }

    def is_valid(self, tol: float = SYMMETRY_TOL) -> bool:
        return all(v <= tol for v in self.residuals().values())

    def require_valid(self, tol: float = SYMMETRY_TOL) -> None:
        if not self.is_valid(tol):
            raise InvalidSymmetry(f"not a fundamental symmetry: {self.residuals()}")

    def signature(self) -> tuple:
        """``(dim V+, dim V-)`` from the eigenvalues of ``J``."""
        ev = np.linalg.eigvalsh(0.5 * (self.J + adjoint(self.J)))
        return int(np.sum(ev > 0)), int(np.sum(ev < 0))

    def product(self, u, v) -> complex:
        """Indefinite product ``(u, J v)``."""
        return complex(np.vdot(u, self.J @ v))


def krein_adjoint(A: np.ndarray, k: KreinStructure) -> np.ndarray:
    """``A^+ = J A* J``."""
    k.require_valid()
    return k.J @ adjoint(A) @ k.J


def krein_selfadjoint_residual(A: np.ndarray, k: KreinStructure) -> float:
    return operator_norm(A - krein_adjoint(A, k))


def delta_J(D: np.ndarray, k: KreinStructure) -> np.ndarray:
    """``Delta_J = ((D D^dagger + D^dagger D)/2 + 1)^{1/2}``.

    The adjoint is the one of the positive product defined by ``J``, which
    is the ordinary adjoint on the carrier.
    """
    k.require_valid()
    D = as_operator(D)
    Dd = adjoint(D)
    sq = 0.5 * (D @ Dd + Dd @ D)
    sq = 0.5 * (sq + adjoint(sq))
    return matrix_function(sq + np.eye(D.shape[0]), np.sqrt)


# ---------------------------------------------------------------------------
# temporal triples


@dataclass(frozen=True, eq=False)
class TemporalTriple:
    """Spectral data ``(A0, H, D)`` with a Hermitian time operator ``T``."""

    base: FiniteSpectralTriple
    T: np.ndarray
    phase: complex = 1

    def __post_init__(self):
        T = as_operator(self.T)
        if T.shape != self.base.dirac.shape:
            raise ValueError("time operator has the wrong dimension")
        # Frobenius norm bounds the operator norm and avoids an SVD here
        if np.linalg.norm(T - adjoint(T)) > 1e-10 * max(1.0, np.linalg.norm(T)):
            raise ValueError("time operator must be Hermitian")
        if not any(abs(complex(self.phase) - p) < 1e-15 for p in PHASES):
            raise ValueError("phase must be one of 1, -1, 1j, -1j")
        object.__setattr__(self, "T", 0.5 * (T + adjoint(T)))

    @property
    def dirac(self) -> np.ndarray:
        return self.base.dirac

    @property
    def dim(self) -> int:
        return self.base.hilbert_dim

    def commutator(self) -> np.ndarray:
        return commutator(self.dirac, self.T)

    def symmetry(self) -> np.ndarray:
        """``J = phase [D, T]``."""
        return self.phase * self.commutator()

    @property
    def time_is_diagonal(self) -> bool:
        return not np.any(self.T - np.diag(np.diagonal(self.T)))

    def weight(self, power: float) -> np.ndarray:
        """``(1 + T^2)^{power}``."""
        if self.time_is_diagonal:
            d = np.diagonal(self.T).real
            return np.diag((1.0 + d * d) ** power).astype(complex)
        return matrix_function(self.T, lambda x: (1.0 + x * x) ** power)

    def weight_apply(self, power: float):
        """Function ``Y -> (1 + T^2)^{power} Y``."""
        if self.time_is_diagonal:
            w = (1.0 + np.diagonal(self.T).real ** 2) ** power
            return lambda Y: w[:, None] * Y
        W = self.weight(power)
        return lambda Y: W @ Y

    def time_reversed(self) -> "TemporalTriple":
        return TemporalTriple(self.base, -self.T, self.phase)


class Band:
    """Compression to the span of orthonormal columns ``Q``."""

    def __init__(self, Q: np.ndarray | None):
        self.Q = None if Q is None else np.asarray(Q, dtype=complex)

    def compress(self, X: np.ndarray) -> np.ndarray:
        if self.Q is None:
            return X
        return adjoint(self.Q) @ X @ self.Q

    def norm(self, X: np.ndarray) -> float:
        return operator_norm(self.compress(X))

    def right(self, X: np.ndarray) -> np.ndarray:
        """``X Q`` (or ``X`` without a band)."""
        return X if self.Q is None else X @ self.Q


@dataclass(frozen=True)
class SymmetryResiduals:
    J: np.ndarray
    selfadjoint: float
    involution: float
    band_selfadjoint: float | None
    band_involution: float | None
    degenerate: bool


def fundamental_symmetry_from_time(t: TemporalTriple, band: np.ndarray | None = None) -> SymmetryResiduals:
    """``J = phase [D, T]`` with ``||J* - J||`` and ``||J^2 - 1||``, full and in the band."""
    J = t.symmetry()
    one = np.eye(t.dim)
    full_sa = hermiticity_residual(J)
    full_inv = operator_norm(J @ J - one)
    b_sa = b_inv = None
    if band is not None:
        B = Band(band)
        JQ = B.right(J)
        b_sa = operator_norm(adjoint(B.Q) @ JQ - adjoint(adjoint(B.Q) @ JQ))
        b_inv = operator_norm(adjoint(B.Q) @ (J @ JQ) - np.eye(B.Q.shape[1]))
    return SymmetryResiduals(J, full_sa, full_inv, b_sa, b_inv, bool(operator_norm(J) == 0))


def delta_T_from_symmetry(D: np.ndarray, J: np.ndarray) -> tuple:
    """``(1 + [D]^2)^{1/2}`` with ``[D]^2 = (D J D J + J D J D)/2``.

    Returns the operator (built from the Hermitian part of ``[D]^2``) and the
    Hermiticity residual of ``[D]^2``.
    """
    D = as_operator(D)
    J = as_operator(J)
    DJ = D @ J
    JD = J @ D
    sq = 0.5 * (DJ @ DJ + JD @ JD)
    res = hermiticity_residual(sq)
    sq = 0.5 * (sq + adjoint(sq))
    return matrix_function(sq + np.eye(D.shape[0]), lambda x: np.sqrt(np.maximum(x, 0.0))), res


def delta_T(t: TemporalTriple) -> tuple:
    """``Delta_T`` with ``[D,T]`` entering through ``J = phase [D, T]``.

    For ``phase = 1`` this is literally ``(1 + (D[D,T]D[D,T] + [D,T]D[D,T]D)/2)^{1/2}``;
    the phase makes the square positive for conventions where ``i[D,T]`` is the
    symmetry.  Returns ``(Delta_T, hermiticity_residual)``.
    """
    return delta_T_from_symmetry(t.dirac, t.symmetry())


def default_band(t: TemporalTriple) -> np.ndarray:
    """Lowest quarter of the eigenmodes of ``Delta_T``."""
    Dt, _ = delta_T(t)
    _, V = np.linalg.eigh(Dt)
    return V[:, : int(np.ceil(t.dim / 4))]


def weighted_norm(a: np.ndarray, n: int, t: TemporalTriple) -> float:
    """``||(1 + T^2)^{n/2} a||``."""
    if n == 0:
        return operator_norm(a)
    return operator_norm(t.weight(n / 2.0) @ a)


def validate_temporal(t: TemporalTriple, tol: float = 0.05, band: np.ndarray | None = None) -> ValidationReport:
    """Residuals of the temporal-triple axioms, compressed to ``band`` if given.

    Checks, with ``J = phase [D, T]`` and ``a`` over the algebra basis:

    ``resolvent_commutes``       ``||[(1+T^2)^{-1/2}, a]||``
    ``symmetry_commutes``        ``||[[D,T], a]||``
    ``weight_commutator``        ``||[[D, (1+T^2)^{1/2}], a]||``
    ``DJ_selfadjoint``           ``||D J - (D J)^dagger||``
    ``J_involution``             ``||J^2 - 1||``
    ``J_selfadjoint``            ``||J^dagger - J||``
    ``bounded_commutators``      certificate ``max ||[D, a]||`` (always passes)

    With a band ``Q`` every residual is ``||Q* X Q||``; operators are only
    ever applied to the ``n x b`` block ``Q``, so the cost is ``O(n^2 b)``.
    """
    n = t.dim
    Q = np.eye(n, dtype=complex) if band is None else np.asarray(band, dtype=complex)
    Qh = adjoint(Q)
    D = t.dirac
    T = t.T
    ph = t.phase
    basis = t.base.algebra_basis

    def apply_D(Y):
        return D @ Y

    def apply_C(Y):  # [D, T]
        return D @ (T @ Y) - T @ (D @ Y)

    def apply_J(Y):
        return ph * apply_C(Y)

    inv_sqrt = t.weight_apply(-0.5)
    sqrt_w = t.weight_apply(0.5)

    def apply_DW(Y):  # [D, (1+T^2)^{1/2}]
        return D @ sqrt_w(Y) - sqrt_w(D @ Y)

    def cnorm(apply_X, a):
        return operator_norm(Qh @ apply_X(a @ Q) - Qh @ (a @ apply_X(Q)))

    def herm(Y):
        return operator_norm(Y - adjoint(Y))

    JQ = apply_J(Q)
    checks = []

    def add(name, val, note=""):
        checks.append(AxiomCheck(name, float(val), bool(val <= tol), note))

    add("resolvent_commutes", max(cnorm(inv_sqrt, a) for a in basis))
    add("symmetry_commutes", max(cnorm(apply_C, a) for a in basis))
    add("weight_commutator", max(cnorm(apply_DW, a) for a in basis))
    # Q* D J Q with D J = D (J Q)
    add("DJ_selfadjoint", herm(Qh @ (D @ JQ)))
    add("J_involution", operator_norm(Qh @ apply_J(JQ) - np.eye(Q.shape[1])))
    add("J_selfadjoint", herm(Qh @ JQ))
    bound = max(cnorm(apply_D, a) for a in basis)
    where = "" if band is None else " (band)"
    checks.append(AxiomCheck("bounded_commutators", 0.0, True, f"max ||[D,a]||{where} = {bound:.6g}"))
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# fixtures

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# signature (-, +): (gamma0)^2 = -1, gamma0 anti-Hermitian; (gamma1)^2 = 1, gamma1 Hermitian
GAMMA0 = 1j * SIGMA_X
GAMMA1 = SIGMA_Y


def _interval_derivative(n: int, h: float) -> np.ndarray:
    """Central difference on ``n`` interior nodes with zero boundary values."""
    return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * h)


def _sine_modes(n: int, m: int) -> np.ndarray:
    j = np.arange(1, n + 1)
    return np.column_stack([np.sqrt(2.0 / (n + 1)) * np.sin(np.pi * k * j / (n + 1)) for k in range(1, m + 1)])


@dataclass(frozen=True, eq=False)
class CylinderFixture:
    triple: TemporalTriple
    band: np.ndarray
    h: float


def minkowski_cylinder(h: float, spatial_modes: int = 2, band_time_modes: int = 6,
                       time_operator: str = "t", space: str = "periodic",
                       space_h: float | None = None) -> CylinderFixture:
    """Flat 1+1 Dirac operator ``D = gamma0 d_t + gamma1 d_x`` on ``[-1, 1] x space``.

    Time uses central differences on the interior nodes of ``[-1, 1]`` with
    spacing ``h``.  Space is either periodic, truncated to Fourier modes
    ``|k| <= spatial_modes`` (``d_x -> i k``), or an interval ``[-1, 1]``
    with central differences of spacing ``space_h`` (default ``h``).  The carrier is
    spinor x time x space.  ``T`` multiplies by ``t`` (or by ``x`` with
    ``time_operator="x"``, which needs an interval space), and
    ``phase = i`` so that ``J = i gamma0 [d_t, t]``.

    The algebra is spanned by ``1`` and the lowest spatial harmonics.  The
    band is a fixed physical cutoff: the lowest ``band_time_modes`` sine
    modes of the time grid (wavenumbers up to ``pi * band_time_modes / 2``)
    and all retained spatial modes (the lowest ``band_time_modes`` sine
    modes for an interval space).  Band residuals then shrink like ``h^2``.
    """
    nt = int(round(2.0 / h)) - 1
    t = -1.0 + h * np.arange(1, nt + 1)
    Xt = _interval_derivative(nt, h)
    if space == "periodic":
        ks = np.arange(-spatial_modes, spatial_modes + 1)
        nx = ks.size
        Xx = np.diag(1j * ks.astype(float))
        x_op = None
        cos_x = 0.5 * (np.eye(nx, k=1) + np.eye(nx, k=-1))
        sin_x = 0.5j * (np.eye(nx, k=1) - np.eye(nx, k=-1))
        space_band = np.eye(nx)
    elif space == "interval":
        hx = h if space_h is None else space_h
        nx = int(round(2.0 / hx)) - 1
        xs = -1.0 + hx * np.arange(1, nx + 1)
        Xx = _interval_derivative(nx, hx)
        x_op = np.diag(xs)
        cos_x = np.diag(np.cos(np.pi * xs / 2))
        sin_x = np.diag(np.sin(np.pi * xs / 2))
        space_band = _sine_modes(nx, min(band_time_modes, nx))
    else:
        raise ValueError("space must be 'periodic' or 'interval'")
    It, Ix, I2 = np.eye(nt), np.eye(nx), np.eye(2)
    D = np.kron(GAMMA0, np.kron(Xt, Ix)) + np.kron(GAMMA1, np.kron(It, Xx))
    if time_operator == "t":
        T = np.kron(I2, np.kron(np.diag(t), Ix))
        basis = [np.kron(I2, np.kron(It, a)) for a in (Ix, cos_x, sin_x)]
    elif time_operator == "x":
        if x_op is None:
            raise ValueError("a spatial time operator needs an interval space")
        T = np.kron(I2, np.kron(It, x_op))
        basis = [np.kron(I2, np.kron(It, Ix)), np.kron(I2, np.kron(np.diag(np.cos(np.pi * t / 2)), Ix))]
    else:
        raise ValueError("time_operator must be 't' or 'x'")
    base = FiniteSpectralTriple(tuple(basis), D, unital=True)
    band = np.kron(I2, np.kron(_sine_modes(nt, min(band_time_modes, nt)), space_band))
    return CylinderFixture(TemporalTriple(base, T, 1j), band, h)


def spatial_time_fault(space_h: float = 1 / 64, h: float = 0.25) -> CylinderFixture:
    """Flat box ``[-1, 1]^2`` whose "time" operator multiplies by ``x``.

    ``[D, x]`` is built from ``gamma1``, so ``i [D, x]`` squares to about
    ``-1`` on low modes: the gradient of ``x`` is spacelike.
    """
    return minkowski_cylinder(h, time_operator="x", space="interval", space_h=space_h)


def oscillator_fixture(n: int, fault: float = 0.0) -> CylinderFixture:
    """Temporal triple that satisfies every axiom exactly on a band.

    On ``C^2 x C^n`` with truncated ladder operator ``a``, the operators
    ``X = (a - a*)/sqrt2`` and ``t = (a + a*)/sqrt2`` obey
    ``[X, t] = 1 - n P_{n-1}``.  With ``D = gamma0 x X`` and ``T = 1 x t``,
    ``J = i [D, T] = i gamma0 x (1 - n P_{n-1})``; the algebra is spanned by
    ``1`` and ``i gamma0 x 1``.  Every compressed residual vanishes on the
    span of the lowest ``n - 2`` levels, which is the returned band (lowest
    quarter).  ``fault`` adds ``fault * sigma_z x 1`` to ``D``: it commutes
    with ``T`` and breaks only the self-adjointness of ``D J``.
    """
    a = np.diag(np.sqrt(np.arange(1, n)), k=1).astype(complex)
    X = (a - adjoint(a)) / np.sqrt(2)
    tt = (a + adjoint(a)) / np.sqrt(2)
    D = np.kron(GAMMA0, X) + fault * np.kron(SIGMA_Z, np.eye(n))
    T = np.kron(np.eye(2), tt)
    basis = (np.eye(2 * n, dtype=complex), np.kron(1j * GAMMA0, np.eye(n)))
    base = FiniteSpectralTriple(basis, D, unital=True)
    m = max(1, int(np.ceil(n / 4)))
    band = np.kron(np.eye(2), np.eye(n)[:, :m])
    return CylinderFixture(TemporalTriple(base, T, 1j), band, 1.0 / n)


def torus_mode(k0: float, k1: float) -> tuple:
    """Flat Lorentzian torus block ``D(k) = i (gamma0 k0 + gamma1 k1)`` with ``J = i gamma0``."""
    D = 1j * (GAMMA0 * k0 + GAMMA1 * k1)
    return D, KreinStructure(1j * GAMMA0)
