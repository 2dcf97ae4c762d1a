"""Lattice model of a static 1+1 Lorentzian spacetime.

The metric is ``g = -N(x)^2 dt^2 + a(x)^2 dx^2`` on an ``nt x nx`` grid of
nodes ``(t, x)`` (integer indices).  Time increases with ``t``; the spatial
direction is either an interval or periodic.

Causal structure comes from a directed acyclic graph whose edges join
``(t, x)`` to ``(t + s, x + k)`` for every primitive direction ``(s, k)``
(``gcd(s, |k|) = 1``, ``1 <= s <= max_stride``) inside the light cone at the
midpoint of the edge.  Longer strides let the lattice resolve slopes other
than ``0`` and ``+-1``, which is what makes path lengths converge to the
continuum distance.  Edge length is the proper time of the straight segment,
so null edges have length zero.

Two independent routes to the distance are provided: longest paths on the
DAG, and the global variational formula

    d(p, q) = max(0, inf { f(q) - f(p) : f causal, g(grad f, grad f) <= -1 }),

discretized as a second-order cone program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import (
    Infeasible,
    LatticeTooSmall,
    MaxIterExceeded,
    NotTimelike,
    SolverFailure,
)
from .numerics import SOLVER_TOL, ConeProgram, solve_cone_program

NULL_RTOL = 1e-12
DEFAULT_MAX_STRIDE = 8


@dataclass(frozen=True, eq=False)
class LatticeSpacetime:
    """Grid with a static Lorentzian metric, signature (-, +).

    Parameters
    ----------
    nt, nx : int
        Number of time slices and spatial nodes.
    dt, dx : float
        Coordinate spacings.
    lapse, scale : float or array of length ``nx``
        ``N(x)`` and ``a(x)``; must be strictly positive.
    topology : {"interval", "periodic"}
    max_stride : int
        Largest number of time steps a single causal edge may span.
    """

    nt: int
    nx: int
    dt: float
    dx: float
    lapse: np.ndarray = 1.0
    scale: np.ndarray = 1.0
    topology: str = "interval"
    max_stride: int = DEFAULT_MAX_STRIDE

    def __post_init__(self):
        if self.nt < 1 or self.nx < 1:
            raise ValueError("lattice needs at least one node in each direction")
        if not (self.dt > 0 and self.dx > 0):
            raise ValueError("dt and dx must be positive")
        if self.topology not in ("interval", "periodic"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.max_stride < 1:
            raise ValueError("max_stride must be at least 1")
        for name in ("lapse", "scale"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.nx,)).copy()
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} must be strictly positive")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def minkowski(cls, n: int, h: float, **kw) -> "LatticeSpacetime":
        """Square ``n x n`` flat lattice with ``dt = dx = h``."""
        return cls(nt=n, nx=n, dt=h, dx=h, **kw)

    @property
    def shape(self) -> tuple:
        return (self.nt, self.nx)

    @property
    def periodic(self) -> bool:
        return self.topology == "periodic"

    @property
    def lattice_tolerance(self) -> float:
        """Largest proper length of a single grid step, ``max(N dt, a dx)``."""
        return float(max(np.max(self.lapse) * self.dt, np.max(self.scale) * self.dx))

    def check_node(self, p) -> tuple:
        t, x = (int(v) for v in p)
        if not (0 <= t < self.nt and 0 <= x < self.nx):
            raise ValueError(f"node {p} outside the {self.nt}x{self.nx} lattice")
        return t, x

    def on_boundary(self, p) -> bool:
        t, x = p
        edge_t = t in (0, self.nt - 1)
        edge_x = (not self.periodic) and x in (0, self.nx - 1)
        return edge_t or edge_x

    def _at(self, arr: np.ndarray, pos: np.ndarray) -> np.ndarray:
        """Linear interpolation of a per-node array at fractional positions."""
        if self.periodic:
            grid = np.arange(self.nx + 1)
            return np.interp(np.mod(pos, self.nx), grid, np.append(arr, arr[0]))
        return np.interp(pos, np.arange(self.nx), arr)

    def edge_midpoint_metric(self, pos: np.ndarray) -> tuple:
        return self._at(self.lapse, pos), self._at(self.scale, pos)

    @cached_property
    def stencil(self) -> tuple:
        """Tuple of ``Direction`` records covering every causal edge type."""
        ratio = float(np.max(self.lapse * self.dt / (self.scale * self.dx)))
        out = []
        xs = np.arange(self.nx)
        for s in range(1, min(self.max_stride, max(self.nt - 1, 1)) + 1):
            kmax = int(math.floor(s * ratio * (1 + NULL_RTOL)))
            if not self.periodic:
                kmax = min(kmax, self.nx - 1)
            for k in range(-kmax, kmax + 1):
                if math.gcd(s, abs(k)) != 1:
                    continue
                if self.periodic:
                    valid = np.ones(self.nx, dtype=bool)
                else:
                    valid = (xs + k >= 0) & (xs + k < self.nx)
                n_mid, a_mid = self.edge_midpoint_metric(xs + 0.5 * k)
                tlen = n_mid * s * self.dt
                xlen = a_mid * abs(k) * self.dx
                valid &= xlen <= tlen * (1 + NULL_RTOL)
                if not valid.any():
                    continue
                timelike = valid & (xlen < tlen * (1 - NULL_RTOL))
                w = np.where(timelike, np.sqrt(np.maximum(tlen**2 - xlen**2, 0.0)), 0.0)
                w = np.where(valid, w, -np.inf)
                out.append(Direction(s, k, w, timelike))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class Direction:
    """Edges ``(t, x) -> (t + s, x + k)``; arrays are indexed by the start ``x``."""

    s: int
    k: int
    weight: np.ndarray  # -inf where no edge starts
    timelike: np.ndarray


def _shift_pull(arr: np.ndarray, k: int, periodic: bool, fill=-np.inf) -> np.ndarray:
    """``out[..., x] = arr[..., x - k]`` with wrap or fill."""
    if periodic:
        return np.roll(arr, k, axis=-1)
    out = np.full_like(arr, fill)
    n = arr.shape[-1]
    if k >= 0:
        out[..., k:] = arr[..., : n - k]
    else:
        out[..., : n + k] = arr[..., -k:]
    return out


def longest_paths(m: LatticeSpacetime, sources, direction: str = "future") -> np.ndarray:
    """Longest causal path lengths from (or to) each source node.

    Returns an array of shape ``(len(sources), nt, nx)``.  With
    ``direction="future"`` entry ``[i, t, x]`` is the longest path from
    ``sources[i]`` to ``(t, x)``; with ``"past"`` it is the longest path from
    ``(t, x)`` to ``sources[i]``.  Unreachable nodes hold ``-inf``.
    """
    srcs = [m.check_node(p) for p in sources]
    B = len(srcs)
    L = np.full((B, m.nt, m.nx), -np.inf)
    for i, (t, x) in enumerate(srcs):
        L[i, t, x] = 0.0
    if B == 0:
        return L
    if direction == "future":
        t0 = min(t for t, _ in srcs)
        for t in range(t0 + 1, m.nt):
            row = L[:, t, :]
            for d in m.stencil:
                if t - d.s < 0:
                    continue
                cand = L[:, t - d.s, :] + d.weight
                np.maximum(row, _shift_pull(cand, d.k, m.periodic), out=row)
    elif direction == "past":
        t1 = max(t for t, _ in srcs)
        for t in range(t1 - 1, -1, -1):
            row = L[:, t, :]
            for d in m.stencil:
                if t + d.s >= m.nt:
                    continue
                cand = _shift_pull(L[:, t + d.s, :], -d.k, m.periodic) + d.weight
                np.maximum(row, cand, out=row)
    else:
        raise ValueError("direction must be 'future' or 'past'")
    return L


def distance_field(m: LatticeSpacetime, p, direction: str = "future") -> np.ndarray:
    """``z -> d(p, z)`` (future) or ``z -> d(z, p)`` (past), zero off the cone."""
    L = longest_paths(m, [p], direction)[0]
    return np.where(np.isfinite(L), L, 0.0)


def distance_fields(m: LatticeSpacetime, points, direction: str = "future") -> np.ndarray:
    L = longest_paths(m, points, direction)
    return np.where(np.isfinite(L), L, 0.0)


def lorentz_distance_paths(m: LatticeSpacetime, p, q) -> float:
    """Longest causal path length from ``p`` to ``q``; 0 when ``q`` is not in J+(p)."""
    p = m.check_node(p)
    q = m.check_node(q)
    if q[0] < p[0]:
        return 0.0
    val = longest_paths(m, [p])[0][q]
    return float(val) if np.isfinite(val) else 0.0


# ---------------------------------------------------------------------------
# causal relations


@dataclass(frozen=True)
class CausalRelationResult:
    """Relation between two nodes.

    ``kind`` is ``"chronological"``, ``"null-causal"`` or ``"unrelated"``.
    ``direction`` is ``"future"`` when ``q`` lies in the causal future of
    ``p``, ``"past"`` when it lies in the causal past, ``None`` otherwise.
    ``path`` is a node sequence from the earlier to the later point realizing
    the longest path.
    """

    kind: str
    direction: str | None
    path: tuple | None
    length: float = 0.0


def _backtrack(m: LatticeSpacetime, L: np.ndarray, p, q) -> tuple:
    path = [q]
    t, x = q
    while (t, x) != tuple(p):
        for d in m.stencil:
            ts = t - d.s
            xs = x - d.k
            if ts < 0:
                continue
            if m.periodic:
                xs %= m.nx
            elif not 0 <= xs < m.nx:
                continue
            w = d.weight[xs]
            if np.isfinite(w) and np.isfinite(L[ts, xs]) and L[ts, xs] + w == L[t, x]:
                t, x = ts, xs
                break
        else:  # pragma: no cover - the DP guarantees a predecessor
            raise RuntimeError("inconsistent longest-path table")
        path.append((t, x))
    return tuple(reversed(path))


def causal_relation(m: LatticeSpacetime, p, q) -> CausalRelationResult:
    """Classify ``q`` relative to ``p`` by reachability on the causal DAG.

    A pair is chronological when some causal path joining them contains a
    strictly timelike edge, equivalently when the longest path is positive.
    ``p == q`` is reported as null-causal.
    """
    p = m.check_node(p)
    q = m.check_node(q)
    if p == q:
        return CausalRelationResult("null-causal", "future", (p,), 0.0)
    lo, hi, direction = (p, q, "future") if q[0] >= p[0] else (q, p, "past")
    L = longest_paths(m, [lo])[0]
    val = L[hi]
    if not np.isfinite(val):
        return CausalRelationResult("unrelated", None, None, 0.0)
    kind = "chronological" if val > 0 else "null-causal"
    return CausalRelationResult(kind, direction, _backtrack(m, L, lo, hi), float(val))


def causal_order_matrix(m: LatticeSpacetime) -> np.ndarray:
    """Boolean ``(n, n)`` matrix over flattened nodes: ``R[i, j]`` iff node j in J+(node i)."""
    nodes = [(t, x) for t in range(m.nt) for x in range(m.nx)]
    L = longest_paths(m, nodes)
    return np.isfinite(L).reshape(len(nodes), -1)


# ---------------------------------------------------------------------------
# variational distance


@dataclass(frozen=True)
class VariationalResult:
    distance: float
    f: np.ndarray
    objective: float
    iterations: int
    violation: float


def _spatial_edges(m: LatticeSpacetime):
    left = np.arange(m.nx - 1) if not m.periodic else np.arange(m.nx)
    right = (left + 1) % m.nx
    return left, right


def _row_increment(m: LatticeSpacetime, row: np.ndarray) -> float:
    """Smallest uniform time step keeping the eikonal constraint on a row shift."""
    left, right = _spatial_edges(m)
    if left.size == 0:
        return float(np.max(m.lapse) * m.dt)
    n_mid, a_mid = m.edge_midpoint_metric(left + 0.5)
    slope = (row[right] - row[left]) / (a_mid * m.dx)
    return float(np.max(n_mid * np.sqrt(1.0 + slope**2)) * m.dt)


def _extend_rows(m: LatticeSpacetime, block: np.ndarray, t0: int) -> np.ndarray:
    f = np.zeros(m.shape)
    t1 = t0 + block.shape[0] - 1
    f[t0 : t1 + 1] = block
    for t in range(t1 + 1, m.nt):
        f[t] = f[t - 1] + _row_increment(m, f[t - 1])
    for t in range(t0 - 1, -1, -1):
        f[t] = f[t + 1] - _row_increment(m, f[t + 1])
    return f


def eikonal_cone_program(m: LatticeSpacetime, p, q, t0: int, t1: int) -> ConeProgram:
    """Cone program for ``min f(q) - f(p)`` on the slab of rows ``t0..t1``.

    Every spatial edge ``(x, x+1)`` of every time step contributes two cones,
    one at each end ``e``:

        || (N, N (f(t,x+1) - f(t,x)) / (a dx)) || <= (f(t+1,e) - f(t,e)) / dt

    with ``N`` and ``a`` at the edge midpoint.  A half-line constraint
    ``f(q) - f(p) >= -1`` keeps the program bounded when ``q`` is not in the
    causal future of ``p``; the answer is clamped at 0 anyway.
    """
    nrow = t1 - t0 + 1
    nx = m.nx
    nvar = nrow * nx

    def idx(t, x):
        return (t - t0) * nx + x

    left, right = _spatial_edges(m)
    n_mid, a_mid = m.edge_midpoint_metric(left + 0.5)
    ne = left.size
    rows, cols, vals, h = [], [], [], []
    r = 0
    for t in range(t0, t1):
        for ends in (left, right):
            base = r + 3 * np.arange(ne)
            # s = (f(t+1,e) - f(t,e)) / dt
            rows += [base, base]
            cols += [idx(t + 1, ends), idx(t, ends)]
            vals += [np.full(ne, 1.0 / m.dt), np.full(ne, -1.0 / m.dt)]
            # u1 = N, u2 = N (f(t,x+1) - f(t,x)) / (a dx)
            g = n_mid / (a_mid * m.dx)
            rows += [base + 2, base + 2]
            cols += [idx(t, right), idx(t, left)]
            vals += [g, -g]
            hh = np.zeros((ne, 3))
            hh[:, 1] = n_mid
            h.append(hh.ravel())
            r += 3 * ne
    dims = [3] * (r // 3)
    # guard f(q) - f(p) + 1 >= 0
    rows += [np.array([r, r])]
    cols += [np.array([idx(*q), idx(*p)])]
    vals += [np.array([1.0, -1.0])]
    h.append(np.array([1.0]))
    dims.append(1)
    r += 1
    M = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r, nvar)
    )
    c = np.zeros(nvar)
    c[idx(*q)] += 1.0
    c[idx(*p)] -= 1.0
    return ConeProgram(c=c, M=M, h=np.concatenate(h), dims=tuple(dims))


def lorentz_distance_variational(
    m: LatticeSpacetime, p, q, tol: float = SOLVER_TOL, max_iter: int = 50000
) -> VariationalResult:
    """Distance as ``max(0, min f(q) - f(p))`` over discrete eikonal functions.

    Only the slab of time slices between ``p`` and ``q`` enters the program;
    the optimal ``f`` is then extended to the whole lattice by uniform row
    shifts that keep the constraint, so the returned ``f`` is a causal
    function on every node.

    Raises
    ------
    SolverFailure
        If the cone solver fails to converge.
    """
    p = m.check_node(p)
    q = m.check_node(q)
    t0, t1 = min(p[0], q[0]), max(p[0], q[0])
    if p == q or t0 == t1:
        # no constraint couples p and q; f(q) - f(p) is unbounded below
        f = _extend_rows(m, np.zeros((1, m.nx)), t0)
        return VariationalResult(0.0, f, float(f[q] - f[p]), 0, 0.0)
    prog = eikonal_cone_program(m, p, q, t0, t1)
    try:
        sol = solve_cone_program(prog, tol=tol, max_iter=max_iter)
    except (Infeasible, MaxIterExceeded) as exc:
        raise SolverFailure(f"variational distance solve failed: {exc}") from exc
    block = sol.x.reshape(t1 - t0 + 1, m.nx)
    f = _extend_rows(m, block, t0)
    return VariationalResult(max(0.0, sol.objective), f, sol.objective, sol.iterations, sol.violation)


# ---------------------------------------------------------------------------
# eikonal diagnostics


def metric_gradient_norm(m: LatticeSpacetime, f: np.ndarray) -> np.ndarray:
    """Central-difference ``g(grad f, grad f)``; NaN where the stencil leaves the grid."""
    f = np.asarray(f, dtype=float)
    out = np.full(m.shape, np.nan)
    if m.nt < 3:
        return out
    ft = (f[2:] - f[:-2]) / (2 * m.dt)
    if m.periodic:
        fx = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * m.dx)
        fx = fx[1:-1]
        cols = slice(None)
        lapse, scale = m.lapse, m.scale
    else:
        if m.nx < 3:
            return out
        fx = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * m.dx)
        ft = ft[:, 1:-1]
        cols = slice(1, -1)
        lapse, scale = m.lapse[1:-1], m.scale[1:-1]
    out[1:-1, cols] = -(ft**2) / lapse**2 + fx**2 / scale**2
    return out


def eikonal_residual(m: LatticeSpacetime, f: np.ndarray) -> np.ndarray:
    """``max(0, g(grad f, grad f) + 1)``: positive where the constraint fails."""
    return np.maximum(0.0, metric_gradient_norm(m, f) + 1.0)


def stencil_mask(mask: np.ndarray, periodic: bool = False) -> np.ndarray:
    """Nodes whose whole central-difference stencil lies inside ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    inner = mask[1:-1].copy()
    inner &= mask[2:] & mask[:-2]
    if periodic:
        inner &= np.roll(mask, 1, axis=1)[1:-1] & np.roll(mask, -1, axis=1)[1:-1]
        out[1:-1] = inner
    else:
        inner[:, 1:-1] &= mask[1:-1, 2:] & mask[1:-1, :-2]
        inner[:, 0] = False
        inner[:, -1] = False
        out[1:-1] = inner
    return out


def chronological_interior(m: LatticeSpacetime, p, margin: int = 1) -> np.ndarray:
    """Nodes strictly inside I+(p), away from the vertex and the cone boundary.

    A node qualifies when its central-difference stencil lies in I+(p) and it
    is more than ``margin`` slices above ``p``.
    """
    L = longest_paths(m, [p])[0]
    chrono = np.isfinite(L) & (L > 0)
    mask = stencil_mask(chrono, m.periodic)
    mask[: min(m.nt, p[0] + margin + 1)] = False
    return mask


# ---------------------------------------------------------------------------
# equality witnesses


@dataclass(frozen=True)
class EqualityWitness:
    """A discrete causal function certifying the distance between ``p`` and ``q``.

    ``gap`` is ``|f(q) - f(p) - d(p, q)|`` for causally related pairs,
    ``|f(q) - f(p)|`` for unrelated pairs and ``max(0, f(q) - f(p))`` when
    ``q`` precedes ``p``.  ``aux`` records the auxiliary points and the
    covering sets; ``eikonal`` summarizes the central-difference residual.
    """

    f: np.ndarray
    gap: float
    kind: str
    difference: float
    distance: float
    aux: dict
    eikonal: dict
    boundary_warning: bool


def _greedy_cover(candidates, cover_sets, targets) -> list:
    remaining = set(targets)
    chosen = []
    while remaining:
        best, gain = None, 0
        for c in candidates:
            g = len(cover_sets[c] & remaining)
            if g > gain:
                best, gain = c, g
        if best is None:
            raise LatticeTooSmall(f"{len(remaining)} surface nodes cannot be covered")
        chosen.append(best)
        remaining -= cover_sets[best]
    return chosen


def _cover_sum(m, S_row, excluded, uncovered, side):
    """Sum of distance functions from points one slice below (side=-1) or above S.

    ``excluded`` marks nodes that may not be used as cone tips; ``uncovered``
    marks the surface nodes that must be reached chronologically.
    """
    t_c = S_row + side
    if not 0 <= t_c < m.nt:
        raise LatticeTooSmall("no room for covering points next to the surface")
    cand = [(t_c, x) for x in range(m.nx) if not excluded[t_c, x]]
    targets = [(S_row, x) for x in range(m.nx) if uncovered[S_row, x]]
    if not targets:
        return np.zeros(m.shape), []
    direction = "future" if side < 0 else "past"
    L = longest_paths(m, cand, direction)
    sets = {
        c: {z for z in targets if np.isfinite(L[i][z]) and L[i][z] > 0} for i, c in enumerate(cand)
    }
    chosen = _greedy_cover(cand, sets, targets)
    keep = [cand.index(c) for c in chosen]
    fields = np.where(np.isfinite(L[keep]), L[keep], 0.0)
    return fields.sum(axis=0), chosen


def _future_mask(m, pts, strict):
    L = longest_paths(m, pts, "future")
    ok = np.isfinite(L) & (L > 0) if strict else np.isfinite(L)
    return ok.any(axis=0)


def _past_mask(m, pts, strict):
    L = longest_paths(m, pts, "past")
    ok = np.isfinite(L) & (L > 0) if strict else np.isfinite(L)
    return ok.any(axis=0)


def _coverable(m, S_row, excluded, uncovered, side) -> bool:
    """Whether tips one slice below/above S, outside ``excluded``, can cover ``uncovered``."""
    t_c = S_row + side
    if not 0 <= t_c < m.nt:
        return False
    targets = uncovered[S_row]
    if not targets.any():
        return True
    cand = [(t_c, x) for x in range(m.nx) if not excluded[t_c, x]]
    if not cand:
        return False
    L = longest_paths(m, cand, "future" if side < 0 else "past")
    reach = (np.isfinite(L[:, S_row]) & (L[:, S_row] > 0)).any(axis=0)
    return bool(np.all(reach[targets]))


def _choose_upper(m, q, S_row, lower_chrono_future, excluded_below):
    """Point q' in I+(q) such that J-(q) lies in I-(q') and I-(q') above S lies in a given set.

    The surface outside I-(q') must also be coverable by tips one slice below
    S that avoid ``excluded_below``.
    """
    Jm_q = _past_mask(m, [q], strict=False)
    for rise in range(1, m.nt - q[0]):
        t = q[0] + rise
        offsets = sorted(range(-rise, rise + 1), key=lambda k: (abs(k), k))
        for k in offsets:
            x = q[1] + k
            if m.periodic:
                x %= m.nx
            elif not 0 <= x < m.nx:
                continue
            qq = (t, x)
            Im = _past_mask(m, [qq], strict=True)
            if not Im[q] or not np.all(Im[Jm_q]):
                continue
            above = Im.copy()
            above[:S_row] = False
            if not np.all(lower_chrono_future[above]):
                continue
            if _coverable(m, S_row, excluded_below, ~Im, side=-1):
                return qq
    raise LatticeTooSmall(f"no admissible point above {q} within the lattice")


def _chronological_past_candidates(m, p, depth):
    out = []
    for s in range(1, depth + 1):
        t = p[0] - s
        if t < 0:
            break
        for k in range(-s, s + 1):
            x = p[1] + k
            if m.periodic:
                x %= m.nx
            elif not 0 <= x < m.nx:
                continue
            out.append((t, x))
    return out


def _eikonal_summary(m, f, region):
    res = eikonal_residual(m, f)
    interior = np.isfinite(res)
    vals = res[region & interior]
    if vals.size == 0:
        return {"cells": 0, "interior_cells": int(interior.sum()), "fraction_le_0.1": float("nan"), "percentiles": {}}
    pct = {str(k): float(np.percentile(vals, k)) for k in (50, 90, 95, 99, 100)}
    return {
        "cells": int(vals.size),
        "interior_cells": int(interior.sum()),
        "fraction_le_0.1": float(np.mean(vals <= 0.1)),
        "percentiles": pct,
    }


def chronological_cells(m, tips_future, tips_past) -> np.ndarray:
    """Cells where the witness is a sum containing a strictly chronological term.

    A cell qualifies when its whole central-difference stencil lies in the
    open chronological future of one of ``tips_future`` (or the open
    chronological past of one of ``tips_past``) and it is not adjacent to
    that tip.  Outside these cells every summand is locally constant.
    """
    region = np.zeros(m.shape, dtype=bool)
    for pts, direction in ((tips_future, "future"), (tips_past, "past")):
        if not pts:
            continue
        L = longest_paths(m, pts, direction)
        for i, (t, x) in enumerate(pts):
            ok = stencil_mask(np.isfinite(L[i]) & (L[i] > 0), m.periodic)
            ok[max(0, t - 1) : t + 2, max(0, x - 1) : x + 2] = False
            region |= ok
    return region


def equality_witness(m: LatticeSpacetime, p, q, eps: float = 0.05, search_depth: int = 4) -> EqualityWitness:
    """Build the finite-sum causal function that nearly attains ``d(p, q)``.

    Causally related pairs use a Cauchy slice through ``q``, an auxiliary
    point ``p'`` in the chronological past of ``p`` and a point ``q'`` in the
    chronological future of ``q``; the witness is

        f = sum_{r in P1} d(r, .) - sum_{r in P2} d(., r) + d(p', .),

    with ``P1`` one slice below the surface (outside J-(q)) covering the
    surface outside I-(q'), and ``P2`` one slice above (outside J+(p))
    covering the surface outside I+(p').  Unrelated pairs add ``d(q', .)``
    for a second auxiliary point below ``q`` and exclude both pasts and
    futures.  A pair with ``q`` before ``p`` reuses the construction for the
    swapped pair.

    Raises
    ------
    LatticeTooSmall
        If the auxiliary points or covering sets do not fit on the lattice.
    """
    p = m.check_node(p)
    q = m.check_node(q)
    rel = causal_relation(m, p, q)
    if p == q:
        f = _extend_rows(m, np.zeros((1, m.nx)), p[0])
        return EqualityWitness(f, 0.0, "equal", 0.0, 0.0, {}, _eikonal_summary(m, f, np.zeros(m.shape, bool)), m.on_boundary(p))
    if rel.direction == "past":
        w = equality_witness(m, q, p, eps, search_depth)
        diff = float(w.f[q] - w.f[p])
        return EqualityWitness(
            w.f, max(0.0, diff), "reversed", diff, 0.0, w.aux, w.eikonal, w.boundary_warning
        )
    if rel.direction == "future":
        return _witness_related(m, p, q, eps, search_depth, rel.length)
    if p[0] > q[0]:
        w = _witness_unrelated(m, q, p, eps, search_depth)
        diff = float(w.f[q] - w.f[p])
        return EqualityWitness(w.f, abs(diff), "unrelated", diff, 0.0, w.aux, w.eikonal, w.boundary_warning)
    return _witness_unrelated(m, p, q, eps, search_depth)


def _witness_related(m, p, q, eps, depth, d_pq):
    S = q[0]
    cands = _chronological_past_candidates(m, p, depth)
    if not cands:
        raise LatticeTooSmall("no room below p for an auxiliary point")
    Lc = longest_paths(m, cands)
    scored = []
    for i, c in enumerate(cands):
        dp, dq = Lc[i][p], Lc[i][q]
        if not (np.isfinite(dp) and dp > 0 and np.isfinite(dq)):
            continue
        alpha = dq - dp - d_pq
        # prefer small |alpha|, then points straight below p
        scored.append((round(abs(alpha), 12), abs(c[1] - p[1]), -c[0], c, alpha))
    if not scored:
        raise LatticeTooSmall("no auxiliary point in the chronological past of p")
    scored.sort()
    Jp_p = _future_mask(m, [p], strict=False)
    Jm_q = _past_mask(m, [q], strict=False)
    for _, _, _, p_aux, alpha in scored:
        I_p_aux = _future_mask(m, [p_aux], strict=True)
        if _coverable(m, S, Jp_p, ~I_p_aux, side=+1):
            break
    else:
        raise LatticeTooSmall("no auxiliary point below p leaves a coverable surface")
    q_aux = _choose_upper(m, q, S, I_p_aux, Jm_q)

    Im_qa = _past_mask(m, [q_aux], strict=True)
    f1, P1 = _cover_sum(m, S, Jm_q, ~Im_qa, side=-1)
    f2, P2 = _cover_sum(m, S, Jp_p, ~I_p_aux, side=+1)
    f = f1 - f2 + distance_field(m, p_aux)

    diff = float(f[q] - f[p])
    region = chronological_cells(m, P1 + [p_aux], P2)
    aux = {
        "surface_row": S,
        "p_aux": list(p_aux),
        "q_aux": list(q_aux),
        "alpha": float(alpha),
        "cover_below": [list(r) for r in P1],
        "cover_above": [list(r) for r in P2],
        "eps": eps,
    }
    return EqualityWitness(
        f,
        abs(diff - d_pq),
        "causal",
        diff,
        float(d_pq),
        aux,
        _eikonal_summary(m, f, region),
        m.on_boundary(p) or m.on_boundary(q),
    )


def _witness_unrelated(m, p, q, eps, depth):
    # p is not later than q; the surface is the slice through q
    S = q[0]
    if p[0] == S:
        p_plus = p
    else:
        Jp = longest_paths(m, [p])[0]
        row = [x for x in range(m.nx) if np.isfinite(Jp[S, x])]
        p_plus = (S, min(row, key=lambda x: (abs(x - p[1]), x)))

    cp = _chronological_past_candidates(m, p, depth)
    cq = _chronological_past_candidates(m, q, depth)
    if not cp or not cq:
        raise LatticeTooSmall("no room below the pair for auxiliary points")
    Lp = longest_paths(m, cp)
    Lq = longest_paths(m, cq)
    pairs = []
    for i, a in enumerate(cp):
        da = Lp[i][p]
        if not (np.isfinite(da) and da > 0):
            continue
        Sa = np.isfinite(Lp[i][S])
        for j, b in enumerate(cq):
            db = Lq[j][q]
            if not (np.isfinite(db) and db > 0):
                continue
            if np.any(Sa & np.isfinite(Lq[j][S])):
                continue
            pairs.append(((round(abs(da - db), 12), round(max(da, db), 12), a, b), i, j))
    pairs.sort()
    excl_above = _future_mask(m, [p, q], strict=False)
    for key, i, j in pairs:
        p_aux, q_aux = key[2], key[3]
        I_pa = np.isfinite(Lp[i]) & (Lp[i] > 0)
        I_qa = np.isfinite(Lq[j]) & (Lq[j] > 0)
        unc_S2 = ~(I_pa | I_qa)
        if _coverable(m, S, excl_above, unc_S2, side=+1):
            dpa, dqa = float(Lp[i][p]), float(Lq[j][q])
            break
    else:
        raise LatticeTooSmall("auxiliary points with disjoint surface shadows do not fit")

    pp_aux = _choose_upper(m, p_plus, S, I_pa, _past_mask(m, [p_plus], strict=False))
    qq_aux = _choose_upper(m, q, S, I_qa, _past_mask(m, [q], strict=False))

    excl_below = _past_mask(m, [p_plus, q], strict=False)
    unc_S = ~_past_mask(m, [pp_aux, qq_aux], strict=True)
    f1, P1 = _cover_sum(m, S, excl_below, unc_S, side=-1)
    f2, P2 = _cover_sum(m, S, excl_above, unc_S2, side=+1)
    f = f1 - f2 + distance_field(m, p_aux) + distance_field(m, q_aux)

    diff = float(f[q] - f[p])
    region = chronological_cells(m, P1 + [p_aux, q_aux], P2)
    aux = {
        "surface_row": S,
        "p_aux": list(p_aux),
        "q_aux": list(q_aux),
        "p_plus": list(p_plus),
        "p_plus_aux": list(pp_aux),
        "q_plus_aux": list(qq_aux),
        "d_p_aux": float(dpa),
        "d_q_aux": float(dqa),
        "half_eps_met": bool(max(dpa, dqa) < eps / 2),
        "cover_below": [list(r) for r in P1],
        "cover_above": [list(r) for r in P2],
        "eps": eps,
    }
    return EqualityWitness(
        f,
        abs(diff),
        "unrelated",
        diff,
        0.0,
        aux,
        _eikonal_summary(m, f, region),
        m.on_boundary(p) or m.on_boundary(q),
    )


# ---------------------------------------------------------------------------
# tangent-space inequalities


@dataclass(frozen=True)
class WrongWayReport:
    lhs: float  # |<v, w>|
    rhs: float  # |<v,v>|^1/2 |<w,w>|^1/2
    holds: bool
    collinear: bool
    equality: bool
    same_cone: bool
    triangle_lhs: float | None  # |v| + |w|
    triangle_rhs: float | None  # |v + w|


def minkowski_product(v, w, lapse: float = 1.0, scale: float = 1.0) -> float:
    return float(-(lapse**2) * v[0] * w[0] + scale**2 * v[1] * w[1])


def wrongway_cs_check(v, w, lapse: float = 1.0, scale: float = 1.0, tol: float = 1e-9) -> WrongWayReport:
    """Reverse Cauchy-Schwarz and triangle inequalities for timelike vectors.

    Raises ``NotTimelike`` unless both ``v`` and ``w`` have ``g(v, v) < 0``.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    gvv = minkowski_product(v, v, lapse, scale)
    gww = minkowski_product(w, w, lapse, scale)
    if not (gvv < 0 and gww < 0):
        raise NotTimelike("both vectors must be timelike")
    lhs = abs(minkowski_product(v, w, lapse, scale))
    rhs = math.sqrt(-gvv) * math.sqrt(-gww)
    cross = v[0] * w[1] - v[1] * w[0]
    collinear = abs(cross) <= tol * np.linalg.norm(v) * np.linalg.norm(w)
    same_cone = v[0] * w[0] > 0
    tri_l = tri_r = None
    if same_cone:
        s = v + w
        tri_l = math.sqrt(-gvv) + math.sqrt(-gww)
        tri_r = math.sqrt(-minkowski_product(s, s, lapse, scale))
    return WrongWayReport(
        lhs=lhs,
        rhs=rhs,
        holds=lhs >= rhs * (1 - tol),
        collinear=bool(collinear),
        equality=abs(lhs - rhs) <= tol * max(1.0, rhs),
        same_cone=bool(same_cone),
        triangle_lhs=tri_l,
        triangle_rhs=tri_r,
    )
