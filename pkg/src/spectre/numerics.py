"""Dense complex linear algebra and a first-order second-order-cone solver.

Operators are plain square ``numpy`` arrays of complex dtype.  Everything in
this module is pure: inputs are never modified, outputs are fresh arrays.

The cone solver is an over-relaxed ADMM splitting with a proximal term,

    minimize  c^T x   subject to   M x + h in K,

where ``K`` is a product of second-order cones ``{(s, u) : ||u|| <= s}``.  It
stops when the iterate is feasible to ``tol`` and the objective has changed by
less than ``tol`` (relative) over the last 50 iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, Infeasible, MaxIterExceeded, NonHermitianInput

EIG_RTOL = 1e-10
SOLVER_TOL = 1e-6
STAGNATION_WINDOW = 50


def as_operator(a) -> np.ndarray:
    """Return ``a`` as a finite square complex array (a copy)."""
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"operator must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("operator has non-finite entries")
    return arr


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def hermiticity_residual(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - adjoint(a), 2))


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ adjoint(self.vectors)


def hermitian_eig(a, rtol: float = 1e-12) -> EigenDecomposition:
    """Eigen-decomposition of a Hermitian operator, eigenvalues ascending.

    Raises ``NonHermitianInput`` when ``||A - A*|| > rtol * ||A||``.
    """
    a = np.asarray(a)
    scale = np.linalg.norm(a, 2) if a.size else 0.0
    if hermiticity_residual(a) > rtol * max(scale, 1e-300):
        raise NonHermitianInput(
            f"operator is not Hermitian (residual {hermiticity_residual(a):.3e})"
        )
    h = 0.5 * (a + adjoint(a))
    values, vectors = np.linalg.eigh(h)
    return EigenDecomposition(values=values, vectors=vectors)


def operator_norm(a) -> float:
    """Largest singular value."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def matrix_function(a, phi: Callable[[np.ndarray], np.ndarray], rtol: float = 1e-12) -> np.ndarray:
    """Apply a real scalar function to a Hermitian operator spectrally.

    ``phi`` receives the whole eigenvalue array and must return an array of the
    same shape; non-finite results raise ``DomainError``.
    """
    eig = hermitian_eig(a, rtol=rtol)
    with np.errstate(all="ignore"):
        fv = np.asarray(phi(eig.values))
    if fv.shape != eig.values.shape or not np.all(np.isfinite(fv)):
        bad = eig.values[~np.isfinite(fv)] if fv.shape == eig.values.shape else eig.values
        raise DomainError(f"function undefined at eigenvalue(s) {bad[:5]}")
    return (eig.vectors * fv) @ adjoint(eig.vectors)


# ---------------------------------------------------------------------------
# second-order cone programs


@dataclass(frozen=True)
class ConeProgram:
    """``minimize c^T x`` subject to ``||u_i(x)|| <= s_i(x)`` for every cone.

    The affine maps are stacked: rows ``offsets[i] : offsets[i] + dims[i]`` of
    ``M x + h`` hold ``(s_i, u_i)``.  A cone of dimension 1 is the half-line
    ``s_i >= 0``.
    """

    c: np.ndarray
    M: sp.csr_matrix
    h: np.ndarray
    dims: tuple
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        M = sp.csr_matrix(self.M, dtype=float)
        h = np.asarray(self.h, dtype=float)
        dims = tuple(int(d) for d in self.dims)
        if M.shape[1] != c.size:
            raise ValueError("constraint matrix and objective disagree on variable count")
        if M.shape[0] != h.size or sum(dims) != h.size:
            raise ValueError("cone dimensions do not match the stacked affine map")
        if any(d < 1 for d in dims):
            raise ValueError("cone dimensions must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "offsets", np.concatenate([[0], np.cumsum(dims)[:-1]]).astype(int))

    @property
    def n(self) -> int:
        return self.c.size

    @classmethod
    def from_constraints(cls, c, constraints: Sequence[tuple]) -> "ConeProgram":
        """Build from ``(A, b, g, d)`` tuples meaning ``||A x + b|| <= g.x + d``.

        ``A`` may have zero rows.
        """
        c = np.asarray(c, dtype=float)
        n = c.size
        blocks, offs, dims = [], [], []
        for A, b, g, d in constraints:
            A = np.asarray(A, dtype=float).reshape(-1, n)
            b = np.asarray(b, dtype=float).reshape(-1)
            g = np.asarray(g, dtype=float).reshape(1, n)
            if A.shape[0] != b.size:
                raise ValueError("inconsistent constraint dimensions")
            blocks.append(np.vstack([g, A]))
            offs.append(np.concatenate([[float(d)], b]))
            dims.append(1 + b.size)
        if blocks:
            M = sp.csr_matrix(np.vstack(blocks))
            h = np.concatenate(offs)
        else:
            M = sp.csr_matrix((0, n))
            h = np.zeros(0)
        return cls(c=c, M=M, h=h, dims=tuple(dims))

    def cone_violation(self, x: np.ndarray) -> float:
        """max_i (||u_i(x)|| - s_i(x))_+"""
        if not self.dims:
            return 0.0
        y = self.M @ x + self.h
        return float(max(0.0, _max_violation(y, self.dims, self.offsets)))


def _group_cones(dims, offsets):
    groups = {}
    for d, o in zip(dims, offsets):
        groups.setdefault(d, []).append(o)
    return {d: np.asarray(o)[:, None] + np.arange(d)[None, :] for d, o in groups.items()}


def _max_violation(y, dims, offsets):
    worst = -np.inf
    for d, idx in _group_cones(dims, offsets).items():
        blk = y[idx]
        s = blk[:, 0]
        nu = np.linalg.norm(blk[:, 1:], axis=1) if d > 1 else np.zeros_like(s)
        worst = max(worst, float(np.max(nu - s)))
    return worst


def _project_cones(y, groups):
    z = np.empty_like(y)
    for d, idx in groups.items():
        blk = y[idx]
        s = blk[:, 0]
        if d == 1:
            z[idx[:, 0]] = np.maximum(s, 0.0)
            continue
        u = blk[:, 1:]
        nu = np.linalg.norm(u, axis=1)
        out = blk.copy()
        inside = nu <= s
        polar = nu <= -s
        mid = ~(inside | polar)
        out[polar] = 0.0
        if np.any(mid):
            alpha = 0.5 * (s[mid] + nu[mid])
            out[mid, 0] = alpha
            out[mid, 1:] = (alpha / nu[mid])[:, None] * u[mid]
        z[idx] = out
    return z


@dataclass(frozen=True)
class ConeSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    violation: float


def solve_cone_program(
    p: ConeProgram,
    tol: float = SOLVER_TOL,
    max_iter: int = 20000,
    rho: float = 1.0,
    sigma: float = 1e-6,
    alpha: float = 1.6,
    x0: np.ndarray | None = None,
) -> ConeSolution:
    """Solve a second-order cone program by over-relaxed ADMM.

    Returns a ``ConeSolution`` with ``status == "optimal"``.  Raises
    ``Infeasible`` when the cone residual settles at a positive value and
    ``MaxIterExceeded`` when the budget runs out first.  The iteration is
    deterministic for identical inputs.
    """
    n = p.n
    if not p.dims:
        if np.any(p.c != 0):
            raise Infeasible("unconstrained linear objective is unbounded")
        x = np.zeros(n) if x0 is None else np.asarray(x0, float)
        return ConeSolution(x, 0.0, "optimal", 0, 0.0)

    M, h, c = p.M, p.h, p.c
    MT = M.T.tocsr()
    MtM = (MT @ M).tocsc()
    groups = _group_cones(p.dims, p.offsets)
    eye = sp.identity(n, format="csc")
    # scale-aware proximal weight keeps the linear system positive definite
    sigma = sigma * max(1.0, float(np.abs(MtM.diagonal()).max(initial=0.0)))

    def factor(r):
        return spla.splu((r * MtM + sigma * eye).tocsc(), permc_spec="COLAMD")

    lu = factor(rho)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    z = _project_cones(M @ x + h, groups)
    u = np.zeros_like(z)

    history = []
    viol_log = []
    for it in range(1, max_iter + 1):
        rhs = sigma * x - c - rho * (MT @ (h - z + u))
        x = lu.solve(rhs)
        Mx_h = M @ x + h
        v = alpha * Mx_h + (1.0 - alpha) * z
        z_old = z
        z = _project_cones(v + u, groups)
        u = u + v - z

        obj = float(c @ x)
        history.append(obj)
        if it % 10 and it < max_iter:
            continue
        r_prim = float(np.linalg.norm(Mx_h - z, np.inf))
        r_dual = rho * float(np.linalg.norm(MT @ (z - z_old), np.inf))
        viol = max(0.0, _max_violation(Mx_h, p.dims, p.offsets))
        viol_log.append(viol)
        if len(history) > STAGNATION_WINDOW:
            ref = history[-STAGNATION_WINDOW - 1]
            stagnant = abs(obj - ref) <= tol * max(1.0, abs(obj))
            if stagnant and viol <= tol:
                return ConeSolution(x, obj, "optimal", it, viol)
        # residual balancing
        if it % 100 == 0:
            if r_prim > 10.0 * r_dual and r_prim > tol:
                rho_new = min(rho * 2.0, 1e6)
            elif r_dual > 10.0 * r_prim and r_dual > tol:
                rho_new = max(rho / 2.0, 1e-6)
            else:
                rho_new = rho
            if rho_new != rho:
                u = u * (rho / rho_new)
                rho = rho_new
                lu = factor(rho)

    viol = p.cone_violation(x)
    # infeasible only when the residual is large and no longer shrinking
    half = viol_log[len(viol_log) // 2] if viol_log else np.inf
    if max_iter >= 1000 and viol > max(1e3 * tol, 1e-3) and viol >= 0.9 * half:
        raise Infeasible(f"cone residual stalled at {viol:.3e}")
    raise MaxIterExceeded(
        f"no convergence in {max_iter} iterations (violation {viol:.3e})",
        x=x,
        objective=float(c @ x),
    )
