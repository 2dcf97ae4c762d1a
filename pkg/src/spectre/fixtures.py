"""Small named spectral triples used by tests, examples and the CLI."""

from __future__ import annotations

import numpy as np

from .gelfand import StateFunctional
from .spectral_triple import FiniteSpectralTriple, RealStructure


def two_point_dirac(m: complex) -> np.ndarray:
    return np.array([[0, m], [np.conj(m), 0]], dtype=complex)


def two_point_triple(m: complex = 1.0) -> FiniteSpectralTriple:
    """``C + C`` acting diagonally on ``C^2`` with off-diagonal ``D`` and grading ``diag(1, -1)``."""
    basis = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))
    return FiniteSpectralTriple(basis, two_point_dirac(m), grading=np.diag([1.0, -1.0]).astype(complex))


def two_point_real_triple(m: complex = 1.0) -> FiniteSpectralTriple:
    """Real even two-point triple of KO-dimension 0 on ``C^2 x C^2``.

    ``a -> a x 1``, ``D = D0 x 1 + 1 x conj(D0)``, ``gamma = gamma0 x gamma0``
    and ``J = swap o K``, so the opposite algebra acts on the second factor.
    """
    D0 = two_point_dirac(m)
    I2 = np.eye(2)
    basis = tuple(np.kron(np.diag(e), I2).astype(complex) for e in ([1.0, 0.0], [0.0, 1.0]))
    D = np.kron(D0, I2) + np.kron(I2, np.conj(D0))
    g0 = np.diag([1.0, -1.0])
    swap = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            swap[2 * i + j, 2 * j + i] = 1.0
    return FiniteSpectralTriple(basis, D, grading=np.kron(g0, g0).astype(complex), real=RealStructure(swap, 0))


def diagonal_triple(D: np.ndarray, grading: np.ndarray | None = None) -> FiniteSpectralTriple:
    """Algebra of all diagonal matrices with a given Dirac operator."""
    D = np.asarray(D, dtype=complex)
    n = D.shape[0]
    basis = tuple(np.diag(np.eye(n)[k]).astype(complex) for k in range(n))
    return FiniteSpectralTriple(basis, D, grading=grading)


def circle_truncation(dim: int) -> FiniteSpectralTriple:
    """Diagonal algebra with ``D = diag(k)`` for ``dim`` consecutive integers centred on 0."""
    k = np.arange(dim) - dim // 2
    return diagonal_triple(np.diag(k.astype(float)))


def circle_position_triple(n: int) -> FiniteSpectralTriple:
    """Circle sampled at ``n`` points: diagonal algebra, ``D = F diag(k) F*``.

    ``F`` is the unitary discrete Fourier matrix and ``k`` the integer
    frequencies in FFT order, so ``D`` is the spectrally exact ``-i d/dtheta``.
    """
    k = np.fft.fftfreq(n, d=1.0 / n)
    F = np.fft.ifft(np.eye(n), axis=0, norm="ortho")
    D = F @ np.diag(k) @ F.conj().T
    return diagonal_triple(0.5 * (D + D.conj().T))


def fourier_circle_triple(N: int, M: int | None = None) -> FiniteSpectralTriple:
    """Circle on Fourier modes ``|k| <= N`` with ``D = diag(k)``.

    The algebra is spanned by the (compressed) multiplication operators by
    ``e^{i j theta}`` for ``|j| <= M`` (default ``N // 2``).
    """
    M = N // 2 if M is None else M
    n = 2 * N + 1
    basis = tuple(np.eye(n, k=-j, dtype=complex) for j in range(-M, M + 1))
    D = np.diag(np.arange(-N, N + 1).astype(complex))
    return FiniteSpectralTriple(basis, D)


def fourier_evaluation_state(t: FiniteSpectralTriple, theta: float) -> StateFunctional:
    """Point evaluation at ``theta`` for the algebra of ``fourier_circle_triple``.

    The basis element shifting modes by ``j`` is multiplication by
    ``e^{i j theta}``, so it evaluates to that phase.
    """
    vals = []
    for a in t.algebra_basis:
        n = a.shape[0]
        js = [j for j in range(-n + 1, n) if np.any(np.diagonal(a, offset=-j))]
        vals.append(np.exp(1j * js[0] * theta))
    return StateFunctional.from_values(t.algebra_basis, vals)


def point_state(n: int, k: int) -> StateFunctional:
    """Pure state at the ``k``-th point of a diagonal algebra on ``C^n``."""
    rho = np.zeros((n, n), dtype=complex)
    rho[k, k] = 1.0
    return StateFunctional.from_density(rho)
