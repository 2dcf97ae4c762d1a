"""Finite ordered spaces and their reconstruction from cones of isotone functions.

Everything here works in the commutative model: a function on ``n`` points
is a real vector, meets and joins are pointwise ``min``/``max``.  On a finite
set every order is recovered by its isotone functions (compactness is
automatic), so the interesting question is whether a *given* generator set
is rich enough.  No test for a Lorentzian origin of an order is attempted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NotSeparating
from .numerics import matrix_function

TIE_TOL = 1e-12
DEDUP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FinitePoset:
    """Partial order on ``{0, ..., n-1}`` with ``leq[i, j]`` meaning ``i <= j``."""

    leq: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.leq, dtype=bool)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("order relation must be a square boolean matrix")
        if not np.all(np.diag(R)):
            raise ValueError("order relation is not reflexive")
        both = R & R.T
        np.fill_diagonal(both, False)
        if np.any(both):
            i, j = map(int, np.argwhere(both)[0])
            raise ValueError(f"order relation is not antisymmetric at ({i}, {j})")
        Ri = R.astype(np.int64)
        if np.any(((Ri @ Ri) > 0) & ~R):
            raise ValueError("order relation is not transitive")
        R = R.copy()
        R.setflags(write=False)
        object.__setattr__(self, "leq", R)

    @property
    def n(self) -> int:
        return self.leq.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, FinitePoset) and np.array_equal(self.leq, other.leq)

    def related_pairs(self) -> np.ndarray:
        R = self.leq.copy()
        np.fill_diagonal(R, False)
        return np.argwhere(R)

    def covering_pairs(self) -> list:
        """Pairs ``i < j`` with nothing strictly between."""
        strict = self.leq.copy()
        np.fill_diagonal(strict, False)
        s = strict.astype(np.int64)
        between = (s @ s) > 0
        return [tuple(map(int, ij)) for ij in np.argwhere(strict & ~between)]

    @classmethod
    def chain(cls, n: int) -> "FinitePoset":
        return cls(np.triu(np.ones((n, n), dtype=bool)))

    @classmethod
    def antichain(cls, n: int) -> "FinitePoset":
        return cls(np.eye(n, dtype=bool))

    @classmethod
    def from_lattice(cls, m) -> "FinitePoset":
        """Causal order of a lattice spacetime (flattened row-major nodes)."""
        from .lorentzian import causal_order_matrix

        return cls(causal_order_matrix(m))


@dataclass(frozen=True, eq=False)
class FunctionCone:
    generators: tuple
    includes_constants: bool = True

    def __post_init__(self):
        gens = tuple(np.asarray(g, dtype=float).ravel() for g in self.generators)
        if not gens:
            raise ValueError("cone needs at least one generator")
        n = gens[0].size
        for g in gens:
            if g.size != n:
                raise ValueError("generators have different lengths")
            if not np.all(np.isfinite(g)):
                raise ValueError("generators must be finite")
        object.__setattr__(self, "generators", gens)

    @property
    def n(self) -> int:
        return self.generators[0].size

    def matrix(self) -> np.ndarray:
        return np.stack(self.generators)

    @classmethod
    def light_cone(cls, m, include_time: bool = True) -> "FunctionCone":
        """Null coordinates ``t + x`` and ``t - x`` (and ``t``) on a Minkowski lattice."""
        t, x = np.meshgrid(np.arange(m.nt) * m.dt, np.arange(m.nx) * m.dx, indexing="ij")
        gens = [(t + x).ravel(), (t - x).ravel()]
        if include_time:
            gens.append(t.ravel())
        return cls(tuple(gens))


def _relation(G: np.ndarray) -> np.ndarray:
    # R[i, j] iff g(i) <= g(j) + tol for every generator
    R = np.ones((G.shape[1], G.shape[1]), dtype=bool)
    for g in G:
        R &= g[:, None] <= g[None, :] + TIE_TOL
    return R


def order_from_cone(n: int, cone: FunctionCone) -> FinitePoset:
    """``x <= y`` iff ``f(x) <= f(y)`` for every generator.

    Raises
    ------
    NotSeparating
        If two distinct points agree on every generator.
    """
    if cone.n != n:
        raise ValueError(f"generators live on {cone.n} points, expected {n}")
    R = _relation(cone.matrix())
    both = R & R.T
    np.fill_diagonal(both, False)
    if np.any(both):
        i, j = map(int, np.argwhere(both)[0])
        raise NotSeparating(f"points {i} and {j} agree on every generator", pair=(i, j))
    return FinitePoset(R)


@dataclass(frozen=True)
class IsotoneResult:
    isotone: bool
    pair: tuple | None = None

    def __bool__(self) -> bool:
        return self.isotone


def isotone_check(p: FinitePoset, f) -> IsotoneResult:
    """Check ``x <= y  =>  f(x) <= f(y)``; reports the first offending pair."""
    f = np.asarray(f, dtype=float).ravel()
    if f.size != p.n:
        raise ValueError("function length does not match the poset")
    bad = p.leq & (f[:, None] > f[None, :] + TIE_TOL)
    if np.any(bad):
        i, j = map(int, np.argwhere(bad)[0])
        return IsotoneResult(False, (i, j))
    return IsotoneResult(True)


def meet(a, b) -> np.ndarray:
    """Pointwise ``a ^ b = (a + b)/2 - |a - b|/2``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return 0.5 * (a + b) - 0.5 * np.abs(a - b)


def join(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return 0.5 * (a + b) + 0.5 * np.abs(a - b)


def matrix_meet(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(a + b)/2 - |a - b|/2`` for Hermitian matrices (experimental).

    On commuting (e.g. diagonal) arguments this is the pointwise meet; for
    non-commuting arguments no order-theoretic meaning is claimed.
    """
    return 0.5 * (a + b) - 0.5 * matrix_function(a - b, np.abs)


def matrix_join(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 0.5 * (a + b) + 0.5 * matrix_function(a - b, np.abs)


@dataclass(frozen=True)
class ClosureReport:
    functions: int
    new_functions: int
    all_isotone: bool
    violations: list = field(default_factory=list)
    constants_present: bool = False


class _Dedup:
    def __init__(self):
        self.items: list = []
        self._keys: set = set()
        self._store = np.empty((0, 0))

    def add(self, v: np.ndarray) -> bool:
        key = tuple(np.round(v / DEDUP_TOL).astype(np.int64))
        if key in self._keys:
            return False
        # rounding can split near-equal vectors across a grid boundary
        k = len(self.items)
        if k and np.min(np.max(np.abs(self._store[:k] - v), axis=1)) <= DEDUP_TOL:
            return False
        if k == self._store.shape[0]:
            grown = np.empty((max(16, 2 * k), v.size))
            if k:
                grown[:k] = self._store[:k]
            self._store = grown
        self._store[k] = v
        self._keys.add(key)
        self.items.append(v)
        return True


def _scalings(depth: int) -> list:
    vals = {Fraction(p, q) for p in range(depth + 1) for q in range(1, depth + 1)}
    return sorted(float(v) for v in vals if v not in (0, 1))


CLOSURE_OPERATIONS = ("sum", "scale", "lattice")


def cone_closure_check(cone: FunctionCone, depth: int, poset: FinitePoset | None = None,
                       operations: Sequence[str] = CLOSURE_OPERATIONS,
                       max_functions: int = 20000) -> ClosureReport:
    """Close the generators under sums, nonnegative rational scaling, meets and joins.

    ``depth`` rounds are applied; scalings use ratios ``p/q`` with
    ``p, q <= depth``.  ``operations`` selects a subset of
    ``("sum", "scale", "lattice")``.  Every generated function is tested for
    isotonicity against ``poset`` (default: the order induced by the cone).
    """
    unknown = set(operations) - set(CLOSURE_OPERATIONS)
    if unknown:
        raise ValueError(f"unknown closure operations {sorted(unknown)}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    p = order_from_cone(cone.n, cone) if poset is None else poset
    pool = _Dedup()
    for g in cone.generators:
        pool.add(g)
    if cone.includes_constants:
        pool.add(np.ones(cone.n))
    start = len(pool.items)
    scales = _scalings(depth) if "scale" in operations else []
    for _ in range(depth):
        current = list(pool.items)
        for a, b in itertools.combinations(current, 2):
            cands = []
            if "sum" in operations:
                cands.append(a + b)
            if "lattice" in operations:
                cands += [meet(a, b), join(a, b)]
            for v in cands:
                pool.add(v)
            if len(pool.items) >= max_functions:
                break
        for a in current:
            for s in scales:
                pool.add(s * a)
        if len(pool.items) >= max_functions:
            break
    violations = []
    for k, f in enumerate(pool.items):
        r = isotone_check(p, f)
        if not r:
            violations.append((k, r.pair))
    const = any(np.ptp(f) <= DEDUP_TOL and abs(f[0]) > DEDUP_TOL for f in pool.items)
    return ClosureReport(len(pool.items), len(pool.items) - start, not violations, violations[:20], const)


def completely_separated_check(p: FinitePoset, cone: FunctionCone) -> bool:
    """True iff the cone induces exactly the order ``p``."""
    return order_from_cone(p.n, cone) == p
