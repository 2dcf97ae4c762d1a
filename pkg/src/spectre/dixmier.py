"""Singular-value functionals and Dixmier-trace estimates at finite truncation.

The partial sums ``sigma_N = mu_0 + ... + mu_{N-1}`` of a singular-value
profile grow like ``c ln N`` for an operator in the Dixmier ideal; the
Dixmier trace is the coefficient ``c``.  Three finite-size estimators are
offered:

``raw``
    ``sigma_N / ln N`` at the largest ``N``.
``cesaro``
    the logarithmic Cesaro mean ``tau_lambda`` at the largest ``lambda``.
``log_fit``
    least-squares fit of ``sigma_N / ln N = a + b / ln N`` over the top half
    of the profile; the estimate is ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import eig_banded
from scipy.special import expi, gamma

from .errors import OutOfRange, TooShort
from .numerics import adjoint

MIN_PROFILE = 64


@dataclass(frozen=True, eq=False)
class SingularProfile:
    """Nonincreasing nonnegative sequence ``mu_0 >= mu_1 >= ...``."""

    mu: np.ndarray
    source_dim: int | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).copy()
        if mu.ndim != 1:
            raise ValueError("profile must be one-dimensional")
        if np.any(mu < 0) or np.any(np.diff(mu) > 1e-12 * max(1.0, mu.max(initial=0.0))):
            raise ValueError("profile must be nonnegative and nonincreasing")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if self.source_dim is None:
            object.__setattr__(self, "source_dim", mu.size)

    @classmethod
    def from_values(cls, values) -> "SingularProfile":
        """Profile from arbitrary nonnegative values (sorted here)."""
        v = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
        return cls(v, v.size)

    def __len__(self) -> int:
        return self.mu.size

    @property
    def partial_sums(self) -> np.ndarray:
        """``sigma_N`` for ``N = 0 .. len``."""
        return np.concatenate([[0.0], np.cumsum(self.mu)])

    def scaled(self, alpha: float) -> "SingularProfile":
        return SingularProfile(alpha * self.mu, self.source_dim)


def singular_values(T) -> SingularProfile:
    """Singular values of ``T`` in decreasing order."""
    T = np.asarray(T, dtype=complex)
    s = np.linalg.svd(T, compute_uv=False) if T.size else np.zeros(0)
    return SingularProfile(np.sort(s)[::-1], T.shape[0])


def sigma(sp: SingularProfile, lam: float) -> float:
    """``sigma_lambda``: partial sum at integers, linear in between."""
    if lam < 1 or lam > len(sp):
        raise OutOfRange(f"lambda = {lam} outside [1, {len(sp)}]")
    N = int(math.floor(lam))
    S = sp.partial_sums
    frac = lam - N
    return float(S[N] + (frac * sp.mu[N] if frac > 0 else 0.0))


def _li(u):
    return expi(np.log(u))


def cesaro_tau(sp: SingularProfile, lam: float, a: float = math.e) -> float:
    """``tau_lambda = (1/ln lambda) int_a^lambda sigma_u / (u ln u) du``.

    On ``[N, N+1]`` the integrand is ``(alpha + beta u)/(u ln u)`` with
    ``sigma_u = alpha + beta u``, whose antiderivative is
    ``alpha ln ln u + beta li(u)``; the integral is summed exactly segment by
    segment.
    """
    if not lam > a or a <= 1:
        raise OutOfRange(f"need 1 < a < lambda, got a = {a}, lambda = {lam}")
    if lam > len(sp):
        raise OutOfRange(f"lambda = {lam} exceeds the profile length {len(sp)}")
    S = sp.partial_sums
    n0 = int(math.floor(a))
    n1 = int(math.ceil(lam))
    N = np.arange(n0, n1)
    lo = np.maximum(N.astype(float), a)
    hi = np.minimum(N + 1.0, lam)
    beta = sp.mu[N]
    alpha = S[N] - N * beta
    total = alpha * (np.log(np.log(hi)) - np.log(np.log(lo))) + beta * (_li(hi) - _li(lo))
    return float(np.sum(total) / math.log(lam))


@dataclass(frozen=True)
class DixmierEstimate:
    value: float
    uncertainty: float
    method: str

    def __iter__(self):
        return iter((self.value, self.uncertainty))


def _drift_uncertainty(v_hi: float, v_lo: float, n_hi: float, n_lo: float) -> float:
    """Residual bias of ``v`` assuming ``v(N) = c + b / ln N``, from two samples."""
    dh = 1.0 / math.log(n_lo) - 1.0 / math.log(n_hi)
    if dh <= 0:
        return abs(v_hi - v_lo)
    b = (v_lo - v_hi) / dh
    return abs(b) / math.log(n_hi)


def _cesaro_uncertainty(taus, Ns) -> float:
    """Residual bias of the Cesaro mean from three samples.

    For ``sigma_N = a ln N + c + o(1)`` the mean behaves like
    ``a + (b0 + b1 ln ln N) / ln N``; the three coefficients are solved for
    and the distance of the last sample from ``a`` is returned.
    """
    L = np.log(np.asarray(Ns, dtype=float))
    X = np.column_stack([np.ones(3), 1.0 / L, np.log(L) / L])
    try:
        a = np.linalg.solve(X, np.asarray(taus))[0]
    except np.linalg.LinAlgError:
        return abs(taus[0] - taus[1])
    return float(abs(taus[0] - a))


def log_fit(sp: SingularProfile) -> tuple:
    """Fit ``sigma_N / ln N = a + b / ln N`` on the top half; returns ``(a, b, rms, stderr_a)``."""
    S = sp.partial_sums
    n = len(sp)
    N = np.arange(max(2, n // 2), n + 1)
    y = S[N] / np.log(N)
    X = np.column_stack([np.ones(N.size), 1.0 / np.log(N)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    rms = float(np.sqrt(np.mean(r**2)))
    dof = max(N.size - 2, 1)
    cov = np.linalg.pinv(X.T @ X) * (r @ r) / dof
    return float(coef[0]), float(coef[1]), rms, float(np.sqrt(max(cov[0, 0], 0.0)))


def dixmier_estimate(sp: SingularProfile, method: str = "log_fit") -> DixmierEstimate:
    """Finite-size estimate of the Dixmier trace with an uncertainty.

    ``raw`` reports the bias implied by its drift between ``N/2`` and ``N``
    under a ``c + b/ln N`` model, ``cesaro`` the bias of a three-sample
    ``c + (b0 + b1 ln ln N)/ln N`` extrapolation; ``log_fit`` reports the
    larger of the fit's rms residual and the standard error of ``a``.
    """
    n = len(sp)
    if n < MIN_PROFILE:
        raise TooShort(f"profile of length {n} is shorter than {MIN_PROFILE}")
    if method == "raw":
        S = sp.partial_sums
        hi, lo = S[n] / math.log(n), S[n // 2] / math.log(n // 2)
        return DixmierEstimate(hi, _drift_uncertainty(hi, lo, n, n // 2), method)
    if method == "cesaro":
        Ns = (n, n // 2, n // 4)
        taus = [cesaro_tau(sp, N) for N in Ns]
        return DixmierEstimate(taus[0], _cesaro_uncertainty(taus, Ns), method)
    if method == "log_fit":
        a, _, rms, se = log_fit(sp)
        return DixmierEstimate(a, max(rms, se), method)
    raise ValueError(f"unknown method {method!r}")


def dixmier_estimate_hermitian(eigenvalues, method: str = "log_fit") -> DixmierEstimate:
    """Estimate for a Hermitian operator from its eigenvalues.

    The positive and negative parts are estimated separately and subtracted;
    a part with fewer than the minimum number of nonzero eigenvalues
    contributes its plain sum (it is trace class at this size).
    """
    ev = np.asarray(eigenvalues, dtype=float)
    parts = []
    for sign in (1.0, -1.0):
        v = sign * ev
        v = np.sort(v[v > 0])[::-1]
        if v.size >= MIN_PROFILE:
            parts.append(dixmier_estimate(SingularProfile(v), method))
        else:
            parts.append(DixmierEstimate(0.0, float(v.sum()), method))
    return DixmierEstimate(parts[0].value - parts[1].value, parts[0].uncertainty + parts[1].uncertainty, method)


def profile_table(sp: SingularProfile, a: float = math.e) -> np.ndarray:
    """Rows ``(N, sigma_N, sigma_N / ln N, tau_N)`` for ``N = 3 .. len``."""
    S = sp.partial_sums
    Ns = np.arange(3, len(sp) + 1)
    taus = np.array([cesaro_tau(sp, N, a) for N in Ns])
    return np.column_stack([Ns, S[Ns], S[Ns] / np.log(Ns), taus])


# ---------------------------------------------------------------------------
# truncated circle and torus


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Trigonometric polynomial ``sum_j c_j e^{i j theta}``."""

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {int(k): complex(v) for k, v in dict(self.coeffs).items() if v != 0})

    @classmethod
    def constant(cls, c: float) -> "TrigPoly":
        return cls({0: c})

    @classmethod
    def cos(cls, j: int = 1, amp: float = 1.0) -> "TrigPoly":
        return cls({j: amp / 2, -j: amp / 2})

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        c = dict(self.coeffs)
        for k, v in other.coeffs.items():
            c[k] = c.get(k, 0) + v
        return TrigPoly(c)

    @property
    def degree(self) -> int:
        return max((abs(k) for k in self.coeffs), default=0)

    @property
    def is_real(self) -> bool:
        return all(abs(v - np.conj(self.coeffs.get(-k, 0))) <= 1e-14 * max(1.0, abs(v)) for k, v in self.coeffs.items())

    def mean(self) -> complex:
        return self.coeffs.get(0, 0.0)

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return sum(v * np.exp(1j * k * theta) for k, v in self.coeffs.items()) + 0 * theta

    def integral(self) -> complex:
        """Exact integral over ``[0, 2 pi)``."""
        return 2 * np.pi * self.mean()


@dataclass(frozen=True, eq=False)
class TruncatedCircleTriple:
    """Fourier truncation of the circle: modes ``k = -N .. N``, ``D = diag(k)``."""

    N: int

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def dim(self) -> int:
        return 2 * self.N + 1

    @property
    def dirac(self) -> np.ndarray:
        return np.diag(self.modes.astype(complex))

    def multiplication(self, f: TrigPoly) -> np.ndarray:
        """Matrix of multiplication by ``f``: ``M[k, l] = c_{k - l}``."""
        M = np.zeros((self.dim, self.dim), dtype=complex)
        for j, c in f.coeffs.items():
            M += c * np.eye(self.dim, k=-j)
        return M

    def inverse_abs_dirac(self, power: float = 1.0) -> np.ndarray:
        """``|D|^{-power}`` on the complement of the kernel, 0 on the kernel."""
        k = np.abs(self.modes).astype(float)
        out = np.zeros_like(k)
        out[k > 0] = k[k > 0] ** (-power)
        return out


def _banded_eigvals(diag_weights: np.ndarray, f: TrigPoly) -> np.ndarray:
    """Eigenvalues of ``W^{1/2} M_f W^{1/2}`` (W diagonal, M_f banded Toeplitz)."""
    s = np.sqrt(diag_weights)
    n = s.size
    b = f.degree
    ab = np.zeros((b + 1, n), dtype=complex)  # lower form: ab[j, i] = A[i + j, i]
    for j in range(b + 1):
        c = f.coeffs.get(j, 0.0)
        if j == 0:
            ab[0] = c * s * s
        elif n - j > 0:
            ab[j, : n - j] = c * s[j:] * s[: n - j]
    if not np.any(ab.imag):
        ab = ab.real
    return eig_banded(ab, lower=True, eigvals_only=True)


def ko_constant(n: int) -> float:
    """``c_n = 2^{n - [n/2] - 1} pi^{n/2} n Gamma(n/2)``."""
    return float(2.0 ** (n - n // 2 - 1) * math.pi ** (n / 2) * n * gamma(n / 2))


@dataclass(frozen=True)
class IntegralCheck:
    lhs: float
    rhs: float
    rel_error: float
    estimate: DixmierEstimate


def _trim(ev: np.ndarray, f: TrigPoly, floor: float) -> np.ndarray:
    # below sup|f| * floor the mode cutoff distorts the eigenvalue count
    sup = float(np.max(np.abs(f(np.linspace(0, 2 * np.pi, 4096, endpoint=False)))))
    return ev[np.abs(ev) > sup * floor * (1 + 1e-12)]


def circle_weighted_spectrum(N: int, f: TrigPoly, n: int = 1, trim: bool = True) -> np.ndarray:
    """Eigenvalues of ``|D|^{-n/2} f |D|^{-n/2}`` on the circle truncation (n = 1)
    or on the flat square torus truncation with ``f`` depending on the first
    angle only (n = 2, two spinor components, modes ``|k_i| <= N``).

    With ``trim`` only eigenvalues above ``sup|f| / N^n`` are kept: every
    mode contributing to those lies inside the cutoff, so their counting
    function is free of truncation effects.
    """
    if not f.is_real:
        raise ValueError("f must be real")
    if n == 1:
        tc = TruncatedCircleTriple(N)
        ev = _banded_eigvals(tc.inverse_abs_dirac(1.0), f)
        return _trim(ev, f, 1.0 / N) if trim else ev
    if n == 2:
        k0 = np.arange(-N, N + 1)
        out = []
        for k1 in range(-N, N + 1):
            r2 = (k0**2 + k1**2).astype(float)
            w = np.zeros_like(r2)
            w[r2 > 0] = 1.0 / r2[r2 > 0]
            ev = _banded_eigvals(w, f)
            out.append(ev)
            out.append(ev)  # spinor multiplicity
        ev = np.concatenate(out)
        return _trim(ev, f, 1.0 / N**2) if trim else ev
    raise ValueError("only n = 1 and n = 2 are supported")


def nc_integral_check(N: int, f: TrigPoly, n: int = 1, method: str = "log_fit") -> IntegralCheck:
    """Compare ``int f dmu`` with ``c_n tr_w(f |D|^{-n})`` at mode cutoff ``N``.

    The operator is symmetrized as ``|D|^{-n/2} f |D|^{-n/2}``, which has the
    same Dixmier trace and is Hermitian for real ``f``.
    """
    ev = circle_weighted_spectrum(N, f, n)
    est = dixmier_estimate_hermitian(ev, method)
    lhs = float(f.integral().real) * (2 * np.pi if n == 2 else 1.0)
    rhs = ko_constant(n) * est.value
    rel = abs(rhs / lhs - 1) if lhs != 0 else abs(rhs)
    return IntegralCheck(lhs, rhs, float(rel), est)


# ---------------------------------------------------------------------------
# signature formula


@dataclass(frozen=True)
class SignatureCheck:
    lhs: DixmierEstimate
    rhs: float
    factor: float
    trace_delta: DixmierEstimate
    exponent: float


def torus_mode_blocks(M: int, lorentzian: bool = True):
    """Per-mode 2x2 Dirac blocks on the flat 2-torus with modes ``|k_i| <= M``.

    Lorentzian: ``D(k) = i (gamma0 k0 + gamma1 k1)`` with ``gamma0 = i sigma_x``
    (square -1, anti-Hermitian) and ``gamma1 = sigma_y``; then
    ``D(k)^2 = (k0^2 - k1^2) 1``.  Riemannian: ``gamma0 = i sigma_x`` and
    ``gamma1 = i sigma_y`` both square to -1, so ``D(k)`` is Hermitian with
    ``D(k)^2 = (k0^2 + k1^2) 1``.  Returns ``(modes, blocks, J)`` with
    ``J = i gamma0`` in the Lorentzian case and ``1`` otherwise.
    """
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    g0 = 1j * sx
    g1 = sy if lorentzian else 1j * sy
    ks = np.arange(-M, M + 1)
    K0, K1 = np.meshgrid(ks, ks, indexing="ij")
    modes = np.column_stack([K0.ravel(), K1.ravel()])
    blocks = 1j * (modes[:, 0, None, None] * g0 + modes[:, 1, None, None] * g1)
    J = 1j * g0 if lorentzian else np.eye(2, dtype=complex)
    return modes, blocks, J


def _block_delta_J(blocks: np.ndarray, J: np.ndarray) -> tuple:
    """Eigen-decompositions of ``Delta_J`` per block (ordinary adjoint, see krein_temporal)."""
    Dd = np.conj(np.swapaxes(blocks, -1, -2))
    sq = 0.5 * (blocks @ Dd + Dd @ blocks) + np.eye(2)
    vals, vecs = np.linalg.eigh(sq)
    return np.sqrt(vals), vecs


def signature_check(M: int, f: TrigPoly | None = None, n: int = 2, q: int = 1,
                    lorentzian: bool = True, exponent: float | None = None,
                    method: str = "log_fit") -> SignatureCheck:
    """Both sides of the signature formula on the flat torus truncation.

    ``lhs = tr_w(f D^2 Delta_J^{exponent})`` and
    ``rhs = (-1)^q (n - 2q)/n tr_w(f Delta_J^{-n})``.  ``exponent`` defaults to
    ``-(n + 2)``, the order that makes ``D^2 Delta_J^{exponent}`` of order
    ``-n``.  Only ``f`` constant or depending on the first angle is
    supported; for a constant ``f`` the per-mode blocks are diagonalized
    exactly, otherwise each fixed-``k1`` column is a banded problem.
    """
    if n != 2:
        raise ValueError("the torus truncation is two-dimensional")
    f = f or TrigPoly.constant(1.0)
    if not f.is_real:
        raise ValueError("f must be real")
    e = -(n + 2) if exponent is None else exponent
    modes, blocks, J = torus_mode_blocks(M, lorentzian)
    dvals, dvecs = _block_delta_J(blocks, J)
    D2 = blocks @ blocks
    # A = D^2 Delta^e per block, symmetrized as Delta^{e/2} D^2 Delta^{e/2}
    half = (dvecs * dvals[:, None, :] ** (e / 2)) @ np.conj(np.swapaxes(dvecs, -1, -2))
    A = half @ D2 @ half
    B = (dvecs * dvals[:, None, :] ** (-n / 2)) @ np.conj(np.swapaxes(dvecs, -1, -2))
    B = B @ B
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    if f.degree == 0:
        c = float(f.mean().real)
        lhs_ev = c * np.linalg.eigvalsh(A).ravel()
        rhs_ev = c * np.linalg.eigvalsh(B).ravel()
    else:
        lhs_ev = _theta0_spectrum(M, modes, A, f)
        rhs_ev = _theta0_spectrum(M, modes, B, f)
    lhs = dixmier_estimate_hermitian(lhs_ev, method)
    tr_delta = dixmier_estimate_hermitian(rhs_ev, method)
    factor = (-1) ** q * (n - 2 * q) / n
    return SignatureCheck(lhs, factor * tr_delta.value, factor, tr_delta, float(e))


def _theta0_spectrum(M, modes, blocks, f: TrigPoly) -> np.ndarray:
    """Eigenvalues of ``X^{1/2} f X^{1/2}`` with X block diagonal over modes and
    f acting as a shift in ``k0``; X must be positive or negative semidefinite
    per block, so the operator is split into its positive and negative parts."""
    out = []
    size = 2 * M + 1
    for sign in (1.0, -1.0):
        vals, vecs = np.linalg.eigh(sign * blocks)
        vals = np.clip(vals, 0.0, None)
        root = (vecs * np.sqrt(vals)[:, None, :]) @ np.conj(np.swapaxes(vecs, -1, -2))
        for k1 in range(size):
            idx = np.arange(size) * size + k1  # modes with fixed k1, increasing k0
            R = np.zeros((2 * size, 2 * size), dtype=complex)
            for a, i in enumerate(idx):
                R[2 * a : 2 * a + 2, 2 * a : 2 * a + 2] = root[i]
            F = np.kron(TruncatedCircleTriple(M).multiplication(f), np.eye(2))
            out.append(sign * np.linalg.eigvalsh(R @ F @ R))
    return np.concatenate(out)
