"""Spectral distance between states of a finite spectral triple.

    d(xi, eta) = sup { |xi(a) - eta(a)| : a = a*, ||[D, a]|| <= 1 }

The supremum is a linear objective over the unit ball of the seminorm
``a -> ||[D, a]||`` restricted to the Hermitian part of the algebra.  It is
solved by ADMM on the splitting ``Z = [D, a]``: a least-squares step in the
algebra coordinates, then a projection of ``Z`` onto the operator-norm unit
ball by clipping singular values.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SolverFailure
from .gelfand import StateFunctional
from .numerics import SOLVER_TOL, STAGNATION_WINDOW, commutator, operator_norm
from .spectral_triple import FiniteSpectralTriple

KERNEL_TOL = 1e-12


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    witness: np.ndarray
    constraint_norm: float
    iterations: int
    disconnected: bool = False


def _stack_real(M: np.ndarray) -> np.ndarray:
    return np.concatenate([M.real.ravel(), M.imag.ravel()])


def _unstack(v: np.ndarray, n: int) -> np.ndarray:
    return (v[: n * n] + 1j * v[n * n :]).reshape(n, n)


def _project_unit_ball(Z: np.ndarray) -> np.ndarray:
    U, s, Vh = np.linalg.svd(Z)
    if s[0] <= 1.0:
        return Z
    return (U * np.minimum(s, 1.0)) @ Vh


def spectral_distance(
    t: FiniteSpectralTriple,
    xi: StateFunctional,
    eta: StateFunctional,
    tol: float = SOLVER_TOL,
    max_iter: int = 20000,
    rho: float = 1.0,
) -> DistanceResult:
    """Spectral distance between two states, with a feasible witness.

    Returns ``distance = inf`` (and ``disconnected = True``) when some
    Hermitian element with ``[D, a] = 0`` separates the states.

    Raises
    ------
    SolverFailure
        If ADMM exhausts ``max_iter`` before the objective stagnates.
    """
    herm = t.hermitian_basis()
    n = t.hilbert_dim
    D = t.dirac
    c = np.array([(xi(h) - eta(h)).real for h in herm])
    if not np.any(np.abs(c) > 0):
        return DistanceResult(0.0, np.zeros((n, n), dtype=complex), 0.0, 0)
    L = np.stack([_stack_real(commutator(D, h)) for h in herm], axis=1)
    U_, s, Vt = np.linalg.svd(L, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > KERNEL_TOL * max(smax, 1.0)))
    kernel = Vt[rank:].T
    if kernel.size and np.max(np.abs(c @ kernel)) > 1e-10 * max(1.0, np.linalg.norm(c)):
        return DistanceResult(np.inf, np.zeros((n, n), dtype=complex), 0.0, 0, True)
    if rank == 0:
        return DistanceResult(0.0, np.zeros((n, n), dtype=complex), 0.0, 0)
    # coordinates y on the complement of the kernel: x = V y, L x = U_r S y
    V = Vt[:rank].T
    Ur = U_[:, :rank]
    sr = s[:rank]
    cy = V.T @ c

    def Lx(y):
        return Ur @ (sr * y)

    y = np.zeros(rank)
    Z = np.zeros((n, n), dtype=complex)
    W = np.zeros((n, n), dtype=complex)
    history = []
    for it in range(1, max_iter + 1):
        # argmin -cy.y + rho/2 || L y - Z + W ||^2
        target = _stack_real(Z - W)
        y = (Ur.T @ target) / sr + cy / (rho * sr**2)
        LY = _unstack(Lx(y), n)
        Z_prev = Z
        Z = _project_unit_ball(LY + W)
        W = W + LY - Z
        obj = float(cy @ y)
        history.append(obj)
        if it % 10 == 0:
            viol = operator_norm(LY) - 1.0
            if len(history) > STAGNATION_WINDOW:
                ref = history[-STAGNATION_WINDOW - 1]
                if abs(obj - ref) <= tol * max(abs(obj), 1e-12) and viol <= 10 * tol:
                    break
            # residual balancing: primal ||LY - Z|| against dual rho ||Z - Z_prev||
            if it % 50 == 0:
                r = np.linalg.norm(LY - Z)
                d = rho * np.linalg.norm(Z - Z_prev)
                if r > 10 * d:
                    rho *= 2.0
                    W /= 2.0
                elif d > 10 * r:
                    rho /= 2.0
                    W *= 2.0
    else:
        raise SolverFailure(f"spectral distance did not converge in {max_iter} iterations")
    x = V @ y
    a = sum(xi_ * h for xi_, h in zip(x, herm))
    norm = operator_norm(commutator(D, a))
    if norm > 1.0:
        x = x / norm
        a = a / norm
        norm = 1.0
    d = float(c @ x)
    if d < 0:
        d, a = -d, -a
    return DistanceResult(d, a, float(norm), it)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SPECTRE_THREADS", "1")))
    except ValueError:
        return 1


def distance_matrix(t: FiniteSpectralTriple, states: Sequence[StateFunctional], tol: float = SOLVER_TOL) -> np.ndarray:
    """Symmetric matrix of pairwise spectral distances.

    Pairs are independent and may be solved on ``SPECTRE_THREADS`` threads;
    the result does not depend on the thread count.
    """
    k = len(states)
    if k < 2:
        raise ValueError("need at least two states")
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]

    def solve(ij):
        i, j = ij
        return spectral_distance(t, states[i], states[j], tol).distance

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(solve, pairs))
    else:
        vals = [solve(ij) for ij in pairs]
    M = np.zeros((k, k))
    for (i, j), v in zip(pairs, vals):
        M[i, j] = M[j, i] = v
    return M
