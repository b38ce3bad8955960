"""Standard Chernoff test as a stepping engine, and the fusion-center baseline.

With a uniform prior the MAP temporary decision is the argmax of the
cumulative log-likelihood (lowest index on ties) and the posterior ratio in
the stopping rule is the gap between the leader and the runner-up.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, StepCapExceeded
from .maximin import PolicyCache
from .probability import ObservationModel

DEFAULT_STEP_CAP = 10**7


@dataclass
class SensorTestState:
    M: int
    sensor_id: int = 0
    cum_llh: np.ndarray = field(default=None)
    n: int = 0
    temp_decision: int = 0

    def __post_init__(self):
        if self.cum_llh is None:
            self.cum_llh = np.zeros(self.M)
        else:
            self.cum_llh = np.array(self.cum_llh, dtype=float)
            self.temp_decision = int(np.argmax(self.cum_llh))

    def reset(self):
        self.cum_llh[:] = 0.0
        self.n = 0
        self.temp_decision = 0

    def add(self, llh: np.ndarray):
        self.cum_llh += llh
        self.n += 1
        self.temp_decision = int(np.argmax(self.cum_llh))


@dataclass(frozen=True)
class WorstCaseLLR:
    leader: int
    margin: float


def margin_of(cum_llh) -> WorstCaseLLR:
    """Leader and gap to the runner-up of a cumulative log-likelihood vector."""
    cum = np.asarray(cum_llh, dtype=float)
    if cum.size < 2:
        raise DimensionError("need at least two hypotheses")
    leader = int(np.argmax(cum))
    rest = np.delete(cum, leader)
    return WorstCaseLLR(leader, float(cum[leader] - rest.max()))


def worst_case_llr(state: SensorTestState) -> WorstCaseLLR:
    return margin_of(state.cum_llh)


def step(state: SensorTestState, model: ObservationModel, policy: PolicyCache, rng: np.random.Generator,
         true_hypothesis: int) -> tuple[int, int]:
    """One Chernoff step: draw an action from the current leader's PMF,
    observe under the true hypothesis, and fold the likelihoods in.

    Consumes exactly two uniforms (action, then observation).
    """
    l = state.sensor_id
    u_act, u_obs = rng.random(2)
    action = int(np.searchsorted(policy.cdf[l, state.temp_decision], u_act, side="right"))
    obs = int(np.searchsorted(model.cdf[true_hypothesis, l, action], u_obs, side="right"))
    state.add(model.log_probs[:, l, action, obs])
    return action, obs


def run_standard_test(model: ObservationModel, gamma: float, true_hypothesis: int, rng: np.random.Generator,
                      policy: PolicyCache | None = None, max_steps: int = DEFAULT_STEP_CAP) -> tuple[int, int]:
    """Run the single-sensor test until the worst-case LLR reaches ``gamma``.

    Returns ``(decision, N)``.
    """
    if model.L != 1:
        raise DimensionError(f"standard test needs a single-sensor model, got L={model.L}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    policy = policy or PolicyCache(model)
    state = SensorTestState(model.M)
    while state.n < max_steps:
        step(state, model, policy, rng, true_hypothesis)
        w = worst_case_llr(state)
        if w.margin >= gamma:
            return w.leader, state.n
    raise StepCapExceeded(f"no decision after {max_steps} steps")


class SensorBank:
    """``L`` independent Chernoff engines stepped together, one per sensor.

    Each call to :meth:`step` draws ``rng.random((L, 2))``, so a bank with a
    single sensor replays exactly the trajectory of :func:`step`.
    """

    def __init__(self, model: ObservationModel, policy: PolicyCache):
        self.model = model
        self.policy = policy
        self.L, self.M = model.L, model.M
        self._idx = np.arange(self.L)
        self.cum_llh = np.zeros((self.L, self.M))
        self.n = np.zeros(self.L, dtype=np.int64)
        self.leader = np.zeros(self.L, dtype=np.int64)
        self.margin = np.zeros(self.L)

    def step(self, rng: np.random.Generator, true_hypothesis: int, active=None):
        u = rng.random((self.L, 2))
        idx = self._idx
        cdf_q = self.policy.cdf[idx, self.leader]
        action = np.sum(u[:, :1] >= cdf_q, axis=1)
        cdf_o = self.model.cdf[true_hypothesis, idx, action]
        obs = np.sum(u[:, 1:] >= cdf_o, axis=1)
        llh = self.model.log_probs[:, idx, action, obs].T
        if active is None:
            self.cum_llh += llh
            self.n += 1
        else:
            self.cum_llh[active] += llh[active]
            self.n[active] += 1
        self.leader = np.argmax(self.cum_llh, axis=1)
        top2 = np.sort(self.cum_llh, axis=1)[:, -2:]
        self.margin = top2[:, 1] - top2[:, 0]
        return action, obs

    def state(self, sensor: int) -> SensorTestState:
        s = SensorTestState(self.M, sensor_id=sensor, cum_llh=self.cum_llh[sensor].copy())
        s.n = int(self.n[sensor])
        return s


def build_fct_model(model: ObservationModel) -> ObservationModel:
    """Single super-sensor whose action ``l * K + k`` activates sensor ``l``
    with action ``k``.
    """
    M, L, K, A = model.probs.shape
    probs = model.probs.reshape(M, 1, L * K, A)
    return ObservationModel(probs)
