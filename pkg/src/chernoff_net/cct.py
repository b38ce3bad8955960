"""Consensus-based Chernoff test on a fusion-free sensor network.

Every round, in order:

0. Termination bits received last round are acted on (one-hop latency).
1. Every running sensor takes one Chernoff step (the engine runs from
   round 1, in parallel with the consensus).
2. Phase 1 -- sensors still in consensus broadcast ``(est, z)``, average
   with weights ``W``, refresh ``z = min(y, min_{closed nbhd} z) + 1``
   (using last round's ``y``), stop once ``z > L + 1`` and otherwise bump
   ``y`` if every neighbour's broadcast estimate is within ``c / L**2``
   entrywise. Stopping scales the frozen estimate by ``L``.
3. Phase 2 -- a sensor past Phase 1 holds local decision ``leader`` if its
   worst-case LLR reaches ``v[l, leader] / est[leader] * |log c|``,
   otherwise null.
4. Phase 3 -- ``d = min(min_{closed nbhd} d_prev, x_prev) + 1`` and the
   agreement streak ``x`` is extended, reset to 1 or zeroed. A sensor with
   ``d > L + 1`` fixes its final decision and floods a termination bit.

Null decisions are stored as ``-1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .chernoff import SensorBank, SensorTestState
from .errors import ConfigurationError, StepCapExceeded
from .maximin import PolicyCache
from .network import NetworkGraph, metropolis_weights
from .probability import ObservationModel
from .records import TrialRecord

NULL = -1
DEFAULT_ROUND_CAP = 10**6
EVENT_FIELDS = ("round", "sensor", "event", "decision", "x", "d", "y", "z", "est")
MESSAGE_TYPES = ("consensus", "phase1_term", "decision", "phase3_term")


# -- messages ---------------------------------------------------------------

@dataclass(frozen=True)
class ConsensusMsg:
    sender: int
    est: tuple
    z: int


@dataclass(frozen=True)
class Phase1TermMsg:
    sender: int


@dataclass(frozen=True)
class DecisionMsg:
    """Detection-phase payload: a hypothesis index (or null) and one counter."""
    sender: int
    decision: int
    d: int


@dataclass(frozen=True)
class Phase3TermMsg:
    sender: int
    final: int


@dataclass
class CctSensorState:
    est: np.ndarray
    y: int
    z: int
    phase1_done: bool
    test: SensorTestState
    local_decision: int | None
    x: int
    d: int
    halted: bool
    final: int | None


def _padded(neighbors, L: int, closed: bool) -> np.ndarray:
    """Neighbour index matrix padded with the node itself."""
    width = max(len(n) for n in neighbors) + (1 if closed else 0)
    width = max(width, 1)
    out = np.repeat(np.arange(L)[:, None], width, axis=1)
    for l, nb in enumerate(neighbors):
        out[l, : len(nb)] = nb
    return out


class CctNetwork:
    """Mutable state of all sensors for one trial, stored column-wise."""

    def __init__(self, model: ObservationModel, graph: NetworkGraph, W: np.ndarray, c: float,
                 policy: PolicyCache, log_events: bool = False):
        if graph.L != model.L:
            raise ConfigurationError(f"graph has {graph.L} nodes but model has {model.L} sensors")
        if not 0 < c < 1:
            raise ValueError("c must lie in (0, 1)")
        L, M = model.L, model.M
        self.model, self.graph, self.W, self.c, self.policy = model, graph, np.asarray(W, float), c, policy
        self.L, self.M = L, M
        self.v = policy.v
        self.log_c = abs(math.log(c))
        self.open_nb = _padded(graph.neighbors, L, closed=False)
        self.closed_nb = _padded(graph.neighbors, L, closed=True)
        self.neighbors = graph.neighbors

        self.n = 0
        self.est = np.array(self.v, dtype=float)  # Phase-1 initial value: own capability row
        self.est_scaled = np.zeros((L, M))
        self.y = np.zeros(L, dtype=np.int64)
        self.z = np.zeros(L, dtype=np.int64)
        self.p1_done = np.zeros(L, dtype=bool)
        self.p1_round = np.full(L, -1, dtype=np.int64)
        self.p1_inbox = np.zeros(L, dtype=bool)
        self.bank = SensorBank(model, policy)
        self.decision = np.full(L, NULL, dtype=np.int64)
        self.prev_decision = np.full(L, NULL, dtype=np.int64)
        self.x = np.zeros(L, dtype=np.int64)
        self.d = np.zeros(L, dtype=np.int64)
        self.halted = np.zeros(L, dtype=bool)
        self.halt_round = np.full(L, -1, dtype=np.int64)
        self.final = np.full(L, NULL, dtype=np.int64)
        self.p3_inbox = np.full(L, NULL, dtype=np.int64)
        self.comms = {k: np.zeros(L, dtype=np.int64) for k in MESSAGE_TYPES}
        self.events = [] if log_events else None

    # -- helpers ------------------------------------------------------------

    def _log(self, sensor, event, decision="", x="", d="", y="", z="", est=None):
        if self.events is not None:
            est_s = "" if est is None else " ".join(repr(float(e)) for e in est)
            self.events.append((self.n, int(sensor), event, decision, x, d, y, z, est_s))

    def _finish_phase1(self, l: int):
        self.p1_done[l] = True
        self.p1_round[l] = self.n
        self.est_scaled[l] = self.L * self.est[l]
        self.comms["phase1_term"][l] += 1
        for j in self.neighbors[l]:
            if not self.p1_done[j]:
                self.p1_inbox[j] = True

    def _halt(self, l: int, final: int, how: str):
        self.halted[l] = True
        self.halt_round[l] = self.n
        self.final[l] = final
        self.comms["phase3_term"][l] += 1
        for j in self.neighbors[l]:
            if not self.halted[j] and self.p3_inbox[j] == NULL:
                self.p3_inbox[j] = final
        self._log(l, how, decision=int(final))

    # -- round stages -------------------------------------------------------

    def deliver(self):
        """Act on termination bits received during the previous round."""
        for l in np.flatnonzero(self.p1_inbox & ~self.p1_done):
            self._finish_phase1(l)
            self._log(l, "p1_recv", est=self.est_scaled[l])
        self.p1_inbox[:] = False
        pending = np.flatnonzero((self.p3_inbox != NULL) & ~self.halted)
        finals = self.p3_inbox[pending].copy()
        self.p3_inbox[:] = NULL
        for l, f in zip(pending, finals):
            self._halt(l, int(f), "halt_recv")

    def phase1_round(self):
        active = ~self.p1_done
        if not active.any():
            return
        L = self.L
        snap_est = self.est.copy()
        snap_z = self.z.copy()
        # frozen sensors keep broadcasting while some neighbour still averages
        frozen_talk = self.p1_done & ~self.halted & np.array([any(active[j] for j in nb) for nb in self.neighbors])
        self.comms["consensus"][active | frozen_talk] += 1

        new_est = self.W @ snap_est
        idx = np.flatnonzero(active)
        self.est[idx] = new_est[idx]
        self.z[idx] = np.minimum(self.y[idx], snap_z[self.closed_nb[idx]].min(axis=1)) + 1
        spread = np.abs(snap_est[self.open_nb[idx]] - snap_est[idx][:, None, :]).max(axis=(1, 2))
        local_ok = spread <= self.c / L**2
        for k, l in enumerate(idx):
            if self.z[l] > L + 1:
                self._finish_phase1(l)
                self._log(l, "p1_term", y=int(self.y[l]), z=int(self.z[l]), est=self.est_scaled[l])
                continue
            self.y[l] = self.y[l] + 1 if local_ok[k] else 0
            self._log(l, "phase1", y=int(self.y[l]), z=int(self.z[l]), est=self.est[l])

    def phase2_round(self):
        running = self.p1_done & ~self.halted
        self.decision[~self.p1_done] = NULL
        idx = np.flatnonzero(running)
        if idx.size == 0:
            return
        leader = self.bank.leader[idx]
        denom = self.est_scaled[idx, leader]
        if np.any(denom <= 0):
            raise ConfigurationError("non-positive capability estimate at Phase-2 trigger")
        thr = self.v[idx, leader] / denom * self.log_c
        self.decision[idx] = np.where(self.bank.margin[idx] >= thr, leader, NULL)

    def phase3_round(self):
        running = self.p1_done & ~self.halted
        idx = np.flatnonzero(running)
        if idx.size == 0:
            self.prev_decision[:] = self.decision
            return
        L = self.L
        # halted sensors keep their final decision visible until neighbours halt
        seen = np.where(self.halted, self.final, self.decision)
        own = seen[idx]
        agree = (seen[self.open_nb[idx]] == own[:, None]).all(axis=1) & (own != NULL)
        same = own == self.prev_decision[idx]
        new_d = np.minimum(self.d[self.closed_nb[idx]].min(axis=1), self.x[idx]) + 1
        new_x = np.where(agree, np.where(same, self.x[idx] + 1, 1), 0)
        self.d[idx] = new_d
        self.x[idx] = new_x
        self.comms["decision"][idx] += 1
        for k, l in enumerate(idx):
            self._log(l, "phase3", decision=int(own[k]), x=int(new_x[k]), d=int(new_d[k]))
        # a sensor whose decision flipped this very round defers halting
        stop = idx[(new_d > L + 1) & same & (own != NULL)]
        for l in stop:
            self._halt(l, int(self.decision[l]), "halt")
        self.prev_decision[:] = self.decision

    def round(self, true_hypothesis: int, rng: np.random.Generator):
        self.n += 1
        self.deliver()
        self.bank.step(rng, true_hypothesis, active=~self.halted)
        self.phase1_round()
        self.phase2_round()
        self.phase3_round()

    # -- views --------------------------------------------------------------

    def sensor_state(self, l: int) -> CctSensorState:
        dec = int(self.decision[l])
        fin = int(self.final[l])
        return CctSensorState(
            est=(self.est_scaled[l] if self.p1_done[l] else self.est[l]).copy(),
            y=int(self.y[l]), z=int(self.z[l]), phase1_done=bool(self.p1_done[l]),
            test=self.bank.state(l), local_decision=None if dec == NULL else dec,
            x=int(self.x[l]), d=int(self.d[l]), halted=bool(self.halted[l]),
            final=None if fin == NULL else fin,
        )

    def outgoing(self) -> list:
        """Messages each live sensor broadcasts at the current state."""
        out = []
        for l in range(self.L):
            if self.halted[l]:
                continue
            if not self.p1_done[l]:
                out.append(ConsensusMsg(l, tuple(self.est[l]), int(self.z[l])))
            else:
                out.append(DecisionMsg(l, int(self.decision[l]), int(self.d[l])))
        return out


def run_cct_trial(model: ObservationModel, graph: NetworkGraph, c: float, true_hypothesis: int,
                  rng: np.random.Generator, W: np.ndarray | None = None, policy: PolicyCache | None = None,
                  log_events: bool = False, max_rounds: int = DEFAULT_ROUND_CAP, seed=None) -> TrialRecord:
    """Run the three-phase test until every sensor has halted."""
    policy = policy or PolicyCache(model)
    if policy.indistinguishable():
        l, i = policy.indistinguishable()[0]
        raise ConfigurationError(f"sensor {l} has zero capability for hypothesis {i}")
    W = metropolis_weights(graph) if W is None else W
    net = CctNetwork(model, graph, W, c, policy, log_events=log_events)
    while not net.halted.all():
        if net.n >= max_rounds:
            raise StepCapExceeded(f"CCT still running after {max_rounds} rounds", seed=seed)
        net.round(true_hypothesis, rng)
    finals = np.unique(net.final)
    decision = int(net.final[np.argmin(net.halt_round)])
    comms = sum(net.comms.values())
    extra = {
        "finals": net.final.copy(),
        "est_final": net.est_scaled.copy(),
        "p1_round": net.p1_round.copy(),
        "halt_round": net.halt_round.copy(),
        "agreed": finals.size == 1,
    }
    if log_events:
        extra["events"] = net.events
    return TrialRecord("cct", true_hypothesis, decision, net.n, comms, N_c=int(net.p1_round.max()),
                       comms_by_type={k: v.copy() for k, v in net.comms.items()}, seed=seed, extra=extra)


def write_events(events, fh) -> None:
    """Write an event log as CSV with header :data:`EVENT_FIELDS`."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EVENT_FIELDS)
    w.writerows(events)


def read_events(fh) -> list[dict]:
    return list(csv.DictReader(fh))


def events_to_csv(events) -> str:
    buf = io.StringIO()
    write_events(events, buf)
    return buf.getvalue()
