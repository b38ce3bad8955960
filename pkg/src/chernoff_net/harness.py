"""Monte Carlo experiments: generators, bound evaluators, aggregation, sweeps.

Randomness scheme: the model and topology of an experiment are drawn from
``default_rng(seed)``; trial ``t`` of sweep cell ``k`` uses
``default_rng(SeedSequence(seed, spawn_key=(k, t)))``. Every aggregate is
computed from integer totals or ``math.fsum`` so trial order cannot change
the result.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .cct import run_cct_trial
from .chernoff import build_fct_model, run_standard_test
from .dct import CapabilityTable, dct_initialize, run_dct_trial
from .errors import ConfigurationError
from .maximin import PolicyCache
from .network import (NetworkGraph, complete_graph, diameter, ergodic_coefficient, metropolis_weights, path_graph,
                      radius, read_edge_list)
from .probability import ObservationModel, clamp_probs
from .records import TrialRecord

PROTOCOLS = ("standard", "fct", "dct", "cct")
CSV_FIELDS = ("protocol", "M", "L", "c", "trials", "err_rate", "err_lo", "err_hi", "mean_N", "mean_N2", "mean_Nc",
              "risk", "mean_comms", "bound_err", "bound_EN", "bound_Nc", "seed")


# -- generators -------------------------------------------------------------

def generate_topology(L: int, seed: int) -> NetworkGraph:
    """Ring on ``ceil(L/2)`` sensors with every other sensor hung off a
    uniformly chosen ring sensor.

    Rings need three nodes, so ``L in {3, 4}`` use a 3-ring; ``L <= 2`` falls
    back to the complete graph.
    """
    if L < 1:
        raise ValueError("need at least one sensor")
    if L <= 2:
        warnings.warn(f"L={L} is too small for a ring; using the complete graph", RuntimeWarning, stacklevel=2)
        return complete_graph(L) if L == 2 else NetworkGraph(1, [])
    rng = np.random.default_rng(seed)
    r = max(3, math.ceil(L / 2))
    edges = [(a, (a + 1) % r) for a in range(r)]
    edges += [(int(rng.integers(r)), node) for node in range(r, L)]
    return NetworkGraph(L, edges)


def generate_bernoulli_model(M: int, L: int, seed: int) -> ObservationModel:
    """Bernoulli observations whose success probability under hypothesis
    ``i`` is uniform on ``(i/M, (i+1)/M)``, drawn independently per
    (sensor, hypothesis, action).

    Draws are sensor-major, so the model for ``L`` sensors is a prefix of
    the model for any larger ``L`` with the same seed.
    """
    if M < 2:
        raise ValueError("need at least two hypotheses")
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(L, M, M))                      # (sensor, hypothesis, action)
    p = (np.arange(M)[None, :, None] + u) / M
    probs = np.stack([1.0 - p, p], axis=-1).transpose(1, 0, 2, 3)
    return ObservationModel(clamp_probs(probs))


def random_connected_graph(L: int, rng: np.random.Generator, extra_p: float | None = None) -> NetworkGraph:
    """Uniform random recursive tree plus independent extra edges."""
    if extra_p is None:
        extra_p = float(rng.uniform(0.0, 0.5))
    edges = {(int(rng.integers(k)), k) for k in range(1, L)}
    for a in range(L):
        for b in range(a + 1, L):
            if (a, b) not in edges and rng.random() < extra_p:
                edges.add((a, b))
    return NetworkGraph(L, edges)


def load_model(path) -> ObservationModel:
    """Read ``{"probs": [...]}`` JSON with shape ``(M, L, K, A)``."""
    data = json.loads(Path(path).read_text())
    return ObservationModel(np.array(data["probs"], dtype=float))


def save_model(model: ObservationModel, path) -> None:
    Path(path).write_text(json.dumps({"probs": model.probs.tolist()}))


# -- configuration ----------------------------------------------------------

@dataclass
class ExperimentConfig:
    protocol: str = "dct"
    M: int = 3
    L: int = 5
    c: float = 0.01
    omega: tuple | None = None
    trials: int = 1000
    seed: int = 0
    topology: str = "generated"
    model: str = "bernoulli"
    true_hypothesis: int | str = 0
    slack: float | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigurationError(f"unknown protocol {self.protocol!r}")
        if not 0 < self.c < 1:
            raise ConfigurationError("c must lie in (0, 1)")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.L < 1 or self.M < 2:
            raise ConfigurationError("need L >= 1 and M >= 2")
        if self.omega is not None:
            self.omega = tuple(float(w) for w in self.omega)
            if len(self.omega) != self.M:
                raise ConfigurationError(f"omega has {len(self.omega)} entries, expected M={self.M}")
        if isinstance(self.true_hypothesis, str) and self.true_hypothesis != "uniform":
            self.true_hypothesis = int(self.true_hypothesis)
        if isinstance(self.true_hypothesis, int) and not 0 <= self.true_hypothesis < self.M:
            raise ConfigurationError(f"true_hypothesis {self.true_hypothesis} out of range")
        if self.topology != "generated" and not self.topology.startswith("file:"):
            raise ConfigurationError(f"topology must be 'generated' or 'file:<path>', got {self.topology!r}")
        if self.model != "bernoulli" and not self.model.startswith("file:"):
            raise ConfigurationError(f"model must be 'bernoulli' or 'file:<path>', got {self.model!r}")

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.M) if self.omega is None else np.array(self.omega)

    @property
    def default_slack(self) -> float:
        if self.slack is not None:
            return self.slack
        return 1.5 if self.c <= 1e-3 else 2.0

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


@dataclass
class Experiment:
    """Everything a trial needs that does not change between trials."""
    cfg: ExperimentConfig
    model: ObservationModel
    policy: PolicyCache
    table: CapabilityTable
    graph: NetworkGraph | None = None
    W: np.ndarray | None = None
    fct_model: ObservationModel | None = None
    fct_policy: PolicyCache | None = None


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    if cfg.model == "bernoulli":
        model = generate_bernoulli_model(cfg.M, cfg.L, cfg.seed)
    else:
        model = load_model(cfg.model[5:])
        if (model.M, model.L) != (cfg.M, cfg.L):
            raise ConfigurationError(f"model file has M={model.M}, L={model.L}; config says M={cfg.M}, L={cfg.L}")
    policy = PolicyCache(model)
    table = dct_initialize(model, policy)
    exp = Experiment(cfg, model, policy, table)
    if cfg.protocol == "cct":
        exp.graph = generate_topology(cfg.L, cfg.seed) if cfg.topology == "generated" else read_edge_list(cfg.topology[5:])
        if exp.graph.L != cfg.L:
            raise ConfigurationError(f"topology has {exp.graph.L} nodes, config says L={cfg.L}")
        exp.W = metropolis_weights(exp.graph)
    elif cfg.protocol == "fct":
        exp.fct_model = build_fct_model(model)
        exp.fct_policy = PolicyCache(exp.fct_model)
    elif cfg.protocol == "standard" and cfg.L != 1:
        raise ConfigurationError("the standard test runs on a single sensor (L=1)")
    return exp


def trial_rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(cell, trial)))


def run_trial(exp: Experiment, cell: int, trial: int, log_events: bool = False) -> TrialRecord:
    cfg = exp.cfg
    rng = trial_rng(cfg.seed, cell, trial)
    truth = int(rng.integers(cfg.M)) if cfg.true_hypothesis == "uniform" else cfg.true_hypothesis
    key = (cfg.seed, cell, trial)
    if cfg.protocol == "dct":
        return run_dct_trial(exp.model, cfg.c, truth, rng, exp.policy, exp.table, seed=key)
    if cfg.protocol == "cct":
        return run_cct_trial(exp.model, exp.graph, cfg.c, truth, rng, W=exp.W, policy=exp.policy,
                             log_events=log_events, seed=key)
    gamma = abs(math.log(cfg.c))
    m, pol = (exp.fct_model, exp.fct_policy) if cfg.protocol == "fct" else (exp.model, exp.policy)
    decision, N = run_standard_test(m, gamma, truth, rng, policy=pol)
    return TrialRecord(cfg.protocol, truth, decision, N, np.zeros(1, dtype=np.int64), seed=key)


# -- bounds -----------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    err: float              # error-probability bound
    EN: float               # leading term of the E[N] upper bound
    EN_converse: float      # leading term of the universal lower bound
    risk: float             # leading term of the risk bound
    Nc: float | None = None  # Phase-1 duration bound (cct)
    slack: float = 1.0

    def EN_r(self, r: int) -> float:
        """Leading term of the r-th moment bound."""
        return self.EN**r


def _log_ratio(num_log: float, eta_h: float) -> float:
    """``num_log / log(1 - eta_h)``, taking the limit 0 when ``eta_h = 1``."""
    if eta_h >= 1.0:
        return 0.0
    return num_log / math.log1p(-eta_h)


def phase1_duration_bound(c: float, I, L: int, h: int, d: int, eta_h: float) -> float:
    """Upper bound on Phase-1 rounds: reaching plus detecting consensus."""
    Imax = float(np.max(I))
    k0 = h * (_log_ratio(math.log(c / Imax), eta_h) + 1)
    kd = h * (_log_ratio(-math.log(d), eta_h) + 1) + L + 1
    return k0 + kd


def theoretical_bounds(protocol: str, M: int, c: float, I, hypothesis: int | None = None, *, L: int | None = None,
                       h: int | None = None, d: int | None = None, eta_h: float | None = None,
                       slack: float = 1.0) -> BoundReport:
    """Bound values at cost ``c`` for the true hypothesis ``hypothesis``
    (worst case over hypotheses when None). ``(1 + o(1))`` factors are left
    out; ``slack`` is carried along for acceptance checks."""
    I = np.atleast_1d(np.asarray(I, dtype=float))
    hyps = range(I.size) if hypothesis is None else [hypothesis]
    log_c = abs(math.log(c))
    conv = float(max(log_c / I[i] for i in hyps))
    if protocol != "cct":
        err = min((M - 1) * c, 1.0)
        return BoundReport(err, conv, conv, c * conv, slack=slack)
    if None in (L, h, d, eta_h):
        raise ValueError("cct bounds need L, h, d and eta_h")
    err = float(max(min((M - 1) * c ** (1.0 / (1.0 - c / I[i])), 1.0) if c < I[i] else 1.0 for i in hyps))
    consensus = h * _log_ratio(math.log(c / I.max()), eta_h)
    detect = max(log_c / (I[i] - c) if I[i] > c else math.inf for i in hyps)
    EN = float(max(consensus, detect))
    return BoundReport(err, EN, conv, c * EN, phase1_duration_bound(c, I, L, h, d, eta_h), slack)


def experiment_bounds(exp: Experiment) -> BoundReport:
    cfg = exp.cfg
    hyp = None if cfg.true_hypothesis == "uniform" else cfg.true_hypothesis
    if cfg.protocol == "cct":
        g = exp.graph
        h = radius(g) if g.L > 1 else 1
        eta_h = ergodic_coefficient(np.linalg.matrix_power(exp.W, h))
        return theoretical_bounds("cct", cfg.M, cfg.c, exp.table.I, hyp, L=cfg.L, h=h,
                                  d=max(diameter(g), 1), eta_h=eta_h, slack=cfg.default_slack)
    I = exp.table.I
    if cfg.protocol == "fct":
        I = exp.fct_policy.v[0]   # FCT has one super-sensor
    elif cfg.protocol == "standard":
        I = exp.policy.v[0]
    return theoretical_bounds(cfg.protocol, cfg.M, cfg.c, I, hyp, slack=cfg.default_slack)


# -- aggregation ------------------------------------------------------------

@dataclass
class AggregateStats:
    protocol: str
    M: int
    L: int
    c: float
    trials: int
    errors: int
    err_rate: float
    err_lo: float
    err_hi: float
    mean_N: float
    mean_N2: float
    mean_Nc: float | None
    risk: float
    mean_comms: float
    bound_err: float
    bound_EN: float
    bound_Nc: float | None
    seed: int
    max_comms: int = 0
    min_comms: int = 0
    records: list = field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_FIELDS}

    def moment(self, r: int) -> float:
        if not self.records:
            raise ValueError("per-trial records were not kept")
        return sum(rec.N**r for rec in self.records) / len(self.records)


def wilson_interval(errors: int, n: int) -> tuple[float, float]:
    lo, hi = proportion_confint(errors, n, alpha=0.05, method="wilson")
    return float(lo), float(hi)


def aggregate(cfg: ExperimentConfig, records, bounds: BoundReport, keep_records: bool = False) -> AggregateStats:
    n = len(records)
    errors = sum(not r.correct for r in records)
    sum_N = sum(r.N for r in records)
    sum_N2 = sum(r.N * r.N for r in records)
    omega = cfg.weights
    risk = cfg.c * sum_N / n + math.fsum(float(omega[r.true_hypothesis]) for r in records if not r.correct) / n
    comms_total = sum(int(r.comms.sum()) for r in records)
    comms_count = sum(r.comms.size for r in records)
    nc = [r.N_c for r in records if r.N_c is not None]
    lo, hi = wilson_interval(errors, n)
    return AggregateStats(
        protocol=cfg.protocol, M=cfg.M, L=cfg.L, c=cfg.c, trials=n, errors=errors, err_rate=errors / n,
        err_lo=lo, err_hi=hi, mean_N=sum_N / n, mean_N2=sum_N2 / n,
        mean_Nc=sum(nc) / len(nc) if nc else None, risk=risk, mean_comms=comms_total / comms_count,
        bound_err=bounds.err, bound_EN=bounds.EN, bound_Nc=bounds.Nc, seed=cfg.seed,
        max_comms=max(int(r.comms.max()) for r in records), min_comms=min(int(r.comms.min()) for r in records),
        records=list(records) if keep_records else [],
    )


def _run_chunk(args):
    cfg, cell, trials, log_events = args
    exp = build_experiment(cfg)
    return [run_trial(exp, cell, t, log_events) for t in trials]


def run_monte_carlo(cfg: ExperimentConfig, *, cell: int = 0, jobs: int = 1, keep_records: bool = False,
                    log_events: bool = False, exp: Experiment | None = None) -> AggregateStats:
    """Run ``cfg.trials`` independent trials and aggregate them.

    A trial that hits its step cap raises :class:`StepCapExceeded` carrying
    ``(seed, cell, trial)`` for replay.
    """
    exp = exp or build_experiment(cfg)
    if jobs <= 1 or cfg.trials < 2:
        records = [run_trial(exp, cell, t, log_events) for t in range(cfg.trials)]
    else:
        chunks = [list(range(cfg.trials))[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, cell, ch, log_events) for ch in chunks]))
        by_trial = {r.seed[2]: r for part in parts for r in part}
        records = [by_trial[t] for t in range(cfg.trials)]
    return aggregate(cfg, records, experiment_bounds(exp), keep_records=keep_records or log_events)


@dataclass
class SweepRow:
    value: float
    stats: AggregateStats | None
    error: str | None = None


def sweep(cfg: ExperimentConfig, axis: str, values, jobs: int = 1, keep_records: bool = False) -> list[SweepRow]:
    """One Monte Carlo block per value of ``axis`` (``"c"`` or ``"L"``).

    Cell ``k`` uses spawn key ``(k, trial)``. A failing cell is recorded and
    the sweep moves on.
    """
    if axis not in ("c", "L"):
        raise ConfigurationError(f"cannot sweep over {axis!r}")
    values = list(values)
    if len(values) < 2:
        raise ConfigurationError("a sweep needs at least two values")
    rows = []
    for k, val in enumerate(values):
        try:
            cell_cfg = cfg.replace(**{axis: int(val) if axis == "L" else float(val)})
            rows.append(SweepRow(val, run_monte_carlo(cell_cfg, cell=k, jobs=jobs, keep_records=keep_records)))
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            rows.append(SweepRow(val, None, f"{type(exc).__name__}: {exc}"))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def stats_to_csv(rows, fh=None) -> str:
    """Render aggregate rows (AggregateStats or SweepRow) with the fixed header."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for row in rows:
        st = row.stats if isinstance(row, SweepRow) else row
        if st is None:
            continue
        w.writerow([_fmt(st.row()[k]) for k in CSV_FIELDS])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def monotone_with_inversions(seq, increasing: bool = True, allowed: int = 1) -> bool:
    """True if ``seq`` is monotone except for at most ``allowed`` adjacent inversions."""
    bad = sum((b <= a) if increasing else (b >= a) for a, b in zip(seq, seq[1:]))
    return bad <= allowed
