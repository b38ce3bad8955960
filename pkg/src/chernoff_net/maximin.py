"""Maximin action PMFs and sensor capabilities.

For a sensor and a presumed hypothesis ``i`` the Chernoff policy randomises
over actions with the PMF ``q`` maximising ``min_{j != i} sum_k q(k) d(i, j, k)``
where ``d`` are KL divergences. The attained value is the sensor's capability
for ``i``. Instances are tiny (a handful of actions and ``M - 1`` constraints),
so the LP is solved exactly by enumerating basic solutions.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .probability import ObservationModel, kl_divergence

_VALUE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DivergenceTable:
    """``d[i, j, k] = D(p_i^k || p_j^k)`` for one sensor, shape ``(M, M, K)``."""

    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 3 or d.shape[0] != d.shape[1]:
            raise ValueError(f"table must have shape (M, M, K), got {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("divergences must be finite and non-negative")
        if np.any(np.diagonal(d, axis1=0, axis2=1) != 0):
            raise ValueError("diagonal entries d[i, i, k] must be 0")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def M(self) -> int:
        return self.d.shape[0]

    @property
    def K(self) -> int:
        return self.d.shape[2]

    def rows(self, i: int) -> np.ndarray:
        """Constraint matrix ``(M-1, K)`` for hypothesis ``i``."""
        return np.delete(self.d[i], i, axis=0)


@dataclass(frozen=True)
class ActionPMF:
    q: np.ndarray
    value: float
    indistinguishable: bool = False


def divergence_table(model: ObservationModel, sensor: int) -> DivergenceTable:
    M, K = model.M, model.K
    d = np.zeros((M, M, K))
    for i in range(M):
        for j in range(M):
            if i == j:
                continue
            for k in range(K):
                d[i, j, k] = kl_divergence(model.probs[i, sensor, k], model.probs[j, sensor, k])
    return DivergenceTable(d)


def _pick(candidates: list[tuple[float, np.ndarray]], K: int) -> ActionPMF:
    best = max(v for v, _ in candidates)
    if best <= _VALUE_TOL:
        return ActionPMF(np.full(K, 1.0 / K), 0.0, indistinguishable=True)
    tol = _VALUE_TOL * max(1.0, best)
    optimal = [q for v, q in candidates if v >= best - tol]
    q = min(optimal, key=lambda x: tuple(np.round(x, 12)))
    return ActionPMF(q, best)


def solve_maximin(table: DivergenceTable, i: int) -> ActionPMF:
    """Exact maximin PMF for hypothesis ``i`` by basic-solution enumeration.

    A vertex of ``{(q, t): D q >= t, q in simplex}`` has some support ``S``
    and an equally sized set ``J`` of tight constraints; solving the square
    system for every such pair and scoring each simplex point by
    ``min(D q)`` recovers the optimum.
    """
    if table.M < 2:
        raise ValueError("need at least two hypotheses")
    D = table.rows(i)
    m, K = D.shape
    candidates = []
    for s in range(1, min(K, m) + 1):
        for S in itertools.combinations(range(K), s):
            cols = list(S)
            for J in itertools.combinations(range(m), s):
                A = np.zeros((s + 1, s + 1))
                A[:s, :s] = D[np.ix_(J, cols)]
                A[:s, s] = -1.0
                A[s, :s] = 1.0
                b = np.zeros(s + 1)
                b[s] = 1.0
                try:
                    sol = np.linalg.solve(A, b)
                except np.linalg.LinAlgError:
                    continue
                qs = sol[:s]
                if not np.all(np.isfinite(qs)) or np.any(qs < -1e-12):
                    continue
                q = np.zeros(K)
                q[cols] = np.clip(qs, 0.0, None)
                q /= q.sum()
                candidates.append((float(np.min(D @ q)), q))
    pmf = _pick(candidates, K)

    # weak-duality sandwich: pure-strategy lower bound, best-response upper bound
    lower = float(np.max(np.min(D, axis=0)))
    upper = float(np.min(np.max(D, axis=1)))
    tol = 1e-9 * max(1.0, upper)
    assert lower - tol <= pmf.value <= upper + tol, (lower, pmf.value, upper)
    assert pmf.indistinguishable or np.all(D @ pmf.q >= pmf.value - 1e-8)
    return pmf


@lru_cache(maxsize=32)
def _simplex_grid(K: int, n: int) -> np.ndarray:
    """All points of the simplex with coordinates in ``{0, 1/n, ..., 1}``."""
    pts = []
    for bars in itertools.combinations(range(n + K - 1), K - 1):
        edges = (-1,) + bars + (n + K - 1,)
        pts.append([edges[t + 1] - edges[t] - 1 for t in range(K)])
    grid = np.array(pts, dtype=float) / n
    grid.setflags(write=False)
    return grid


def brute_force_maximin(table: DivergenceTable, i: int, grid_step: float) -> ActionPMF:
    """Exhaustive search over a simplex grid; an oracle for :func:`solve_maximin`."""
    if not 0 < grid_step <= 0.5:
        raise ValueError("grid_step must lie in (0, 0.5]")
    n = max(2, int(round(1.0 / grid_step)))
    grid = _simplex_grid(table.K, n)
    values = np.min(grid @ table.rows(i).T, axis=1)
    best = float(values.max())
    if best <= _VALUE_TOL:
        return ActionPMF(np.full(table.K, 1.0 / table.K), 0.0, indistinguishable=True)
    idx = np.flatnonzero(values >= best - _VALUE_TOL * max(1.0, best))
    q = min((grid[k] for k in idx), key=tuple)
    return ActionPMF(q.copy(), best)


class PolicyCache:
    """Per-(sensor, hypothesis) maximin PMFs and capabilities for one model.

    Built once before simulation and read-only afterwards.
    """

    def __init__(self, model: ObservationModel):
        self.model = model
        L, M, K = model.L, model.M, model.K
        self.tables = [divergence_table(model, l) for l in range(L)]
        self.pmfs = [[solve_maximin(self.tables[l], i) for i in range(M)] for l in range(L)]
        self.v = np.array([[self.pmfs[l][i].value for i in range(M)] for l in range(L)])
        q = np.array([[self.pmfs[l][i].q for i in range(M)] for l in range(L)])
        cdf = np.cumsum(q, axis=-1)
        cdf[..., -1] = 1.0
        self.q = q
        self.cdf = cdf
        for arr in (self.v, self.q, self.cdf):
            arr.setflags(write=False)

    def indistinguishable(self) -> list[tuple[int, int]]:
        """``(sensor, hypothesis)`` pairs with zero capability."""
        return [(l, i) for l in range(self.model.L) for i in range(self.model.M) if self.pmfs[l][i].indistinguishable]
