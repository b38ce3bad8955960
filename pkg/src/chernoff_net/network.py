"""Network topology, consensus weights, ergodic coefficient and the
sufficient-condition check for consensus-based testing.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConnectivityError


class NetworkGraph:
    """Undirected simple graph on nodes ``0 .. L-1``."""

    def __init__(self, L: int, edges):
        if L < 1:
            raise ValueError("need at least one node")
        norm = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (0 <= a < L and 0 <= b < L):
                raise ValueError(f"edge ({a}, {b}) out of range for L={L}")
            e = (min(a, b), max(a, b))
            if e in norm:
                raise ValueError(f"duplicate edge {e}")
            norm.add(e)
        self.L = L
        self.edges = frozenset(norm)
        nbrs = [[] for _ in range(L)]
        for a, b in sorted(norm):
            nbrs[a].append(b)
            nbrs[b].append(a)
        self.neighbors = tuple(tuple(sorted(n)) for n in nbrs)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(n) for n in self.neighbors])

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.L, self.L), dtype=int)
        for a, b in self.edges:
            A[a, b] = A[b, a] = 1
        return A

    def bfs_distances(self, root: int) -> list[int]:
        dist = [-1] * self.L
        dist[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in self.neighbors[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def is_connected(self) -> bool:
        return min(self.bfs_distances(0)) >= 0

    def is_complete(self) -> bool:
        return len(self.edges) == self.L * (self.L - 1) // 2

    def __eq__(self, other):
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return self.L == other.L and self.edges == other.edges

    __hash__ = None

    def __repr__(self):
        return f"NetworkGraph(L={self.L}, edges={len(self.edges)})"


def complete_graph(L: int) -> NetworkGraph:
    return NetworkGraph(L, [(a, b) for a in range(L) for b in range(a + 1, L)])


def path_graph(L: int) -> NetworkGraph:
    return NetworkGraph(L, [(a, a + 1) for a in range(L - 1)])


def ring_graph(L: int) -> NetworkGraph:
    if L < 3:
        raise ValueError("a ring needs at least 3 nodes")
    return NetworkGraph(L, [(a, (a + 1) % L) for a in range(L)])


def star_graph(L: int) -> NetworkGraph:
    return NetworkGraph(L, [(0, a) for a in range(1, L)])


def read_edge_list(path) -> NetworkGraph:
    """Parse ``L <count>`` followed by one ``a b`` pair per line (0-based).

    Blank lines and ``#`` comments are ignored.
    """
    L = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if L is None:
            if len(parts) != 2 or parts[0] != "L":
                raise ValueError(f"{path}:{lineno}: expected header 'L <count>'")
            L = int(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'a b', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if L is None:
        raise ValueError(f"{path}: missing 'L <count>' header")
    return NetworkGraph(L, edges)


def format_edge_list(g: NetworkGraph) -> str:
    lines = [f"L {g.L}"] + [f"{a} {b}" for a, b in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def _eccentricities(g: NetworkGraph) -> list[int]:
    ecc = []
    for root in range(g.L):
        dist = g.bfs_distances(root)
        if min(dist) < 0:
            raise ConnectivityError("graph is not connected")
        ecc.append(max(dist))
    return ecc


def diameter(g: NetworkGraph) -> int:
    """Largest shortest-path distance between two nodes."""
    return max(_eccentricities(g))


def radius(g: NetworkGraph) -> int:
    """Minimum eccentricity, i.e. the height of a shallowest spanning tree
    (a BFS tree rooted at a center)."""
    return min(_eccentricities(g))


def metropolis_weights(g: NetworkGraph) -> np.ndarray:
    """Metropolis-Hastings weights ``1 / (1 + max(deg a, deg b))`` on edges,
    residual mass on the diagonal. Symmetric, hence doubly stochastic."""
    if not g.is_connected():
        raise ConnectivityError("graph is not connected")
    deg = g.degrees
    W = np.zeros((g.L, g.L))
    for a, b in g.edges:
        W[a, b] = W[b, a] = 1.0 / (1.0 + max(deg[a], deg[b]))
    W[np.diag_indices(g.L)] = 1.0 - W.sum(axis=1)
    return W


def spectral_radius(B: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> tuple[float, bool]:
    """Power-iteration estimate of the spectral radius of ``B``.

    Returns ``(estimate, converged)``. Uses the norm-growth ratio so that
    dominant eigenvalues of equal modulus but opposite sign do not stall it.
    """
    n = B.shape[0]
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = B @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, True
        # two steps per estimate: robust to +/- lambda pairs
        z = B @ (y / norm)
        norm2 = np.linalg.norm(z)
        new = math.sqrt(norm * norm2)
        if abs(new - est) <= tol * max(1.0, new):
            return new, True
        est = new
        x = z / norm2 if norm2 > 0 else z
    return est, False


@dataclass(frozen=True)
class WeightReport:
    row_ok: bool
    col_ok: bool
    support_ok: bool
    spectral_radius: float
    converged: bool = True

    @property
    def ok(self) -> bool:
        return self.row_ok and self.col_ok and self.support_ok and self.spectral_radius < 1.0


def validate_weights(W: np.ndarray, g: NetworkGraph | None = None, tol: float = 1e-12) -> WeightReport:
    """Check row/column stochasticity, the sparsity pattern, and that
    ``W - 11^T/L`` is a strict contraction.

    Without ``g`` the support check requires a positive diagonal and a
    symmetric pattern whose induced graph is connected.
    """
    W = np.asarray(W, dtype=float)
    L = W.shape[0]
    if W.shape != (L, L):
        raise ValueError("weight matrix must be square")
    row_ok = bool(np.all(np.abs(W.sum(axis=1) - 1.0) <= tol))
    col_ok = bool(np.all(np.abs(W.sum(axis=0) - 1.0) <= tol))
    if g is None:
        pattern = W > 0
        off = pattern & ~np.eye(L, dtype=bool)
        edges = [(a, b) for a in range(L) for b in range(a + 1, L) if off[a, b]]
        support_ok = bool(np.all(np.diag(pattern)) and np.array_equal(off, off.T)
                          and NetworkGraph(L, edges).is_connected())
    else:
        want = g.adjacency().astype(bool) | np.eye(L, dtype=bool)
        support_ok = bool(np.all(W[want] > 0) and np.all(W[~want] == 0))
    rho, converged = spectral_radius(W - np.full((L, L), 1.0 / L))
    if not converged:
        warnings.warn(f"power iteration did not converge; best estimate {rho:.6g}", RuntimeWarning, stacklevel=2)
    return WeightReport(row_ok, col_ok, support_ok, rho, converged)


def ergodic_coefficient(W: np.ndarray) -> float:
    """``min_{i != j} sum_k min(w_ik, w_jk)``: the smallest row overlap."""
    W = np.asarray(W, dtype=float)
    L = W.shape[0]
    if L == 1:
        return 1.0
    best = math.inf
    for i in range(L):
        for j in range(i + 1, L):
            best = min(best, float(np.minimum(W[i], W[j]).sum()))
    return min(max(best, 0.0), 1.0)


def _abs_log_one_minus(x: float) -> float:
    return math.inf if x >= 1.0 else abs(math.log1p(-x))


@dataclass(frozen=True)
class CctConditionReport:
    lhs: np.ndarray                 # I(i) * |log max_j I(j)| per hypothesis
    rhs: tuple[float, float, float]
    holds: tuple[bool, bool, bool]  # conditions (i), (ii), (iii)
    eta: float                      # eta(W)
    eta_h: float                    # eta(W^h)
    lemma1: bool                    # 0 < eta(W^h) < 1


def check_cct_conditions(I, W: np.ndarray, h: int) -> CctConditionReport:
    """Evaluate the three sufficient conditions under which consensus is
    not the bottleneck of the consensus-based test:

    (i)   ``I(i) |log max I| < |log(1 - eta(W^h))| / h``
    (ii)  ``I(i) |log max I| < |log(1 - eta(W)^h)| / h``
    (iii) ``I(i) |log max I| < |log(1 - eta(W))|``
    """
    I = np.asarray(I, dtype=float)
    if h < 1:
        raise ValueError("radius must be at least 1")
    eta = ergodic_coefficient(W)
    eta_h = ergodic_coefficient(np.linalg.matrix_power(W, h))
    if eta_h <= 0.0:
        raise AssertionError(f"eta(W^h) = {eta_h} on a supposedly connected graph")
    lhs = I * abs(math.log(I.max()))
    rhs = (_abs_log_one_minus(eta_h) / h, _abs_log_one_minus(eta**h) / h, _abs_log_one_minus(eta))
    holds = tuple(bool(np.all(lhs < r)) for r in rhs)
    return CctConditionReport(lhs, rhs, holds, eta, eta_h, 0.0 < eta_h < 1.0)
