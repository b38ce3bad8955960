"""Decentralized Chernoff test with a fusion center.

Initialization: each sensor reports its capabilities ``v[l, :]`` and gets
back its response fractions ``rho[l, i] = v[l, i] / I(i)`` (two messages).
Test phase: every sensor runs its own Chernoff engine each round and tells
the fusion center its leader whenever the worst-case LLR reaches
``rho[l, leader] * |log c|`` and the leader differs from what it last sent.
The fusion center decides once every sensor's latest report agrees, then
broadcasts a halt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chernoff import SensorBank, SensorTestState, step, worst_case_llr
from .errors import ConfigurationError, StepCapExceeded
from .maximin import PolicyCache
from .probability import ObservationModel
from .records import TrialRecord

DEFAULT_ROUND_CAP = 10**6
INIT_MESSAGES = 2


@dataclass(frozen=True)
class CapabilityTable:
    v: np.ndarray    # (L, M)
    I: np.ndarray    # (M,)
    rho: np.ndarray  # (L, M)

    @classmethod
    def from_capabilities(cls, v) -> "CapabilityTable":
        v = np.array(v, dtype=float)
        zero = np.argwhere(v <= 0)
        if zero.size:
            l, i = zero[0]
            raise ConfigurationError(f"sensor {l} has zero capability for hypothesis {i}")
        I = v.sum(axis=0)
        return cls(v, I, v / I)

    def thresholds(self, c: float) -> np.ndarray:
        """Per-(sensor, hypothesis) trigger levels ``rho * |log c|``."""
        return self.rho * abs(math.log(c))


def dct_initialize(model: ObservationModel, policy: PolicyCache | None = None) -> CapabilityTable:
    policy = policy or PolicyCache(model)
    return CapabilityTable.from_capabilities(policy.v)


@dataclass
class FusionState:
    L: int
    latest: list = None
    decided: int | None = None
    comms: np.ndarray = None

    def __post_init__(self):
        if self.latest is None:
            self.latest = [None] * self.L
        if self.comms is None:
            self.comms = np.full(self.L, INIT_MESSAGES, dtype=np.int64)


def dct_fusion_round(fusion: FusionState, inbox) -> bool:
    """Fold a batch of ``(sender, hypothesis)`` reports; return True when a
    halt is broadcast (which costs one message per sensor)."""
    for sender, hyp in inbox:
        fusion.latest[sender] = int(hyp)
        fusion.comms[sender] += 1
    if fusion.decided is None and fusion.latest[0] is not None and all(h == fusion.latest[0] for h in fusion.latest):
        fusion.decided = fusion.latest[0]
        fusion.comms += 1
        return True
    return False


def dct_sensor_round(state: SensorTestState, model: ObservationModel, policy: PolicyCache, table: CapabilityTable,
                     c: float, rng: np.random.Generator, true_hypothesis: int, last_sent: int | None):
    """One engine step at a single sensor; returns the hypothesis to report or None."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    step(state, model, policy, rng, true_hypothesis)
    w = worst_case_llr(state)
    if w.margin >= table.rho[state.sensor_id, w.leader] * abs(math.log(c)) and w.leader != last_sent:
        return w.leader
    return None


def run_dct_trial(model: ObservationModel, c: float, true_hypothesis: int, rng: np.random.Generator,
                  policy: PolicyCache | None = None, table: CapabilityTable | None = None,
                  max_rounds: int = DEFAULT_ROUND_CAP, seed=None) -> TrialRecord:
    """Simulate one DCT run in synchronous rounds: all sensors step, then
    the fusion center processes the batch of reports."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    policy = policy or PolicyCache(model)
    table = table or dct_initialize(model, policy)
    L = model.L
    thr = table.thresholds(c)
    bank = SensorBank(model, policy)
    fusion = FusionState(L)
    last_sent = np.full(L, -1, dtype=np.int64)
    sent_at = np.zeros(L, dtype=np.int64)
    idx = np.arange(L)
    for n in range(1, max_rounds + 1):
        bank.step(rng, true_hypothesis)
        leader = bank.leader
        send = (bank.margin >= thr[idx, leader]) & (leader != last_sent)
        senders = np.flatnonzero(send)
        if senders.size == 0:
            continue
        last_sent[senders] = leader[senders]
        sent_at[senders] = n
        if dct_fusion_round(fusion, zip(senders.tolist(), leader[senders].tolist())):
            return TrialRecord("dct", true_hypothesis, fusion.decided, n, fusion.comms.copy(),
                               trigger_times=sent_at, seed=seed)
    raise StepCapExceeded(f"DCT undecided after {max_rounds} rounds", seed=seed)
