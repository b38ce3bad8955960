"""Finite-alphabet observation distributions and log-likelihood arithmetic.

Every test in the package works in the log domain: per-step likelihood
vectors are looked up from a precomputed ``log_probs`` table and added to a
cumulative vector, so no probability products are ever formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, InfiniteDivergenceError

#: Floor applied by model generators so every KL divergence stays finite.
PROB_FLOOR = 1e-6
_SUM_TOL = 1e-12


def _as_probs(p) -> np.ndarray:
    if isinstance(p, Categorical):
        return p.probs
    return np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class Categorical:
    """Distribution over the alphabet ``{0, ..., A-1}`` with ``A >= 2``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DimensionError(f"need a 1-d vector with at least 2 entries, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def size(self) -> int:
        return self.probs.size

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def __eq__(self, other):
        if not isinstance(other, Categorical):
            return NotImplemented
        return self.size == other.size and bool(np.allclose(self.probs, other.probs, rtol=0, atol=_SUM_TOL))

    __hash__ = None


def kl_divergence(p, q) -> float:
    """D(p || q) in nats; terms with ``p(a) = 0`` contribute nothing."""
    p = _as_probs(p)
    q = _as_probs(q)
    if p.shape != q.shape:
        raise DimensionError(f"alphabet mismatch: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        raise InfiniteDivergenceError("q(a) = 0 where p(a) > 0")
    ps = p[support]
    return max(float(np.sum(ps * np.log(ps / q[support]))), 0.0)


def sample(p, rng: np.random.Generator, size=None):
    """Draw alphabet indices from ``p`` by inverse CDF on ``rng.random``.

    One uniform is consumed per draw, so the result is a pure function of
    the generator state.
    """
    cdf = p.cdf if isinstance(p, Categorical) else Categorical(p).cdf
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right") if size is not None else int(np.searchsorted(cdf, u, side="right"))


def clamp_probs(p, floor: float = PROB_FLOOR) -> np.ndarray:
    """Clamp entries to ``[floor, 1 - floor]`` and renormalise along the last axis."""
    p = np.clip(np.asarray(p, dtype=float), floor, 1.0 - floor)
    return p / p.sum(axis=-1, keepdims=True)


class ObservationModel:
    """Observation distributions indexed by (hypothesis, sensor, action).

    ``probs[i, l, k]`` is the distribution of the observation seen by sensor
    ``l`` after action ``k`` when hypothesis ``i`` is true. The paper's setting
    has as many actions as hypotheses; the fusion-center baseline needs
    ``M * L`` actions on a single super-sensor, so ``K`` is free here.
    """

    def __init__(self, probs, floor: float = PROB_FLOOR):
        probs = np.array(probs, dtype=float)
        if probs.ndim != 4:
            raise DimensionError("probs must have shape (M, L, K, A)")
        M, L, K, A = probs.shape
        if M < 2 or A < 2 or L < 1 or K < 1:
            raise DimensionError(f"degenerate model shape {probs.shape}")
        if np.any(np.abs(probs.sum(axis=-1) - 1.0) > _SUM_TOL):
            raise ValueError("every distribution must sum to 1")
        # 1e-9 relative slack absorbs renormalisation after clamping
        if np.any(probs < floor * (1 - 1e-9)):
            raise InfiniteDivergenceError(f"entries below the probability floor {floor}")
        probs.setflags(write=False)
        self.probs = probs
        self.log_probs = np.log(probs)
        self.log_probs.setflags(write=False)
        cdf = np.cumsum(probs, axis=-1)
        cdf[..., -1] = 1.0
        cdf.setflags(write=False)
        self.cdf = cdf

    M = property(lambda self: self.probs.shape[0])
    L = property(lambda self: self.probs.shape[1])
    K = property(lambda self: self.probs.shape[2])
    A = property(lambda self: self.probs.shape[3])

    def dist(self, i: int, sensor: int, action: int) -> Categorical:
        return Categorical(self.probs[i, sensor, action])

    def sensor_model(self, sensor: int) -> "ObservationModel":
        """The single-sensor model seen by ``sensor`` alone."""
        return ObservationModel(self.probs[:, sensor : sensor + 1])

    def separability_violations(self) -> list[tuple[int, int, int]]:
        """``(sensor, i, j)`` triples that no action distinguishes."""
        bad = []
        for l in range(self.L):
            for i in range(self.M):
                for j in range(self.M):
                    if i != j and all(
                        kl_divergence(self.probs[i, l, k], self.probs[j, l, k]) <= 0.0 for k in range(self.K)
                    ):
                        bad.append((l, i, j))
        return bad

    def __eq__(self, other):
        if not isinstance(other, ObservationModel):
            return NotImplemented
        return self.probs.shape == other.probs.shape and bool(np.array_equal(self.probs, other.probs))

    __hash__ = None

    def __repr__(self):
        return f"ObservationModel(M={self.M}, L={self.L}, K={self.K}, A={self.A})"


def log_likelihoods(model: ObservationModel, sensor: int, action: int, observation: int) -> np.ndarray:
    """Vector ``(ln p_1(a), ..., ln p_M(a))`` for one observation."""
    for name, idx, n in (("sensor", sensor, model.L), ("action", action, model.K), ("observation", observation, model.A)):
        if not 0 <= idx < n:
            raise IndexError(f"{name} index {idx} out of range [0, {n})")
    return model.log_probs[:, sensor, action, observation].copy()
