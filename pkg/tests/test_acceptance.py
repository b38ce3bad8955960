"""End-to-end acceptance checks, one test per criterion.

Every test prints a single ``PASS``/``FAIL`` line (collected in the terminal
summary). Parameters are fixed up front: master seed 0, true hypothesis 0,
and a fixed instance generator per randomized criterion.
"""
import math
import time

import numpy as np
import pytest

from chernoff_net import (ExperimentConfig, PolicyCache, brute_force_maximin, check_cct_conditions,
                          divergence_table, metropolis_weights, radius, solve_maximin, validate_weights)
from chernoff_net.harness import (build_experiment, monotone_with_inversions, random_connected_graph,
                                  run_monte_carlo, sweep)
from chernoff_net.network import ergodic_coefficient
from chernoff_net.probability import ObservationModel, clamp_probs

from conftest import ACCEPTANCE_LINES, random_model
from test_cct import _lemma_round

SEED = 0
TRUTH = 0
C_GRID = [0.1, 0.03, 0.01, 0.003, 0.001]


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def dct_grid():
    """DCT, M=3, L=5, 10^4 trials per c on the shared grid."""
    base = ExperimentConfig(protocol="dct", M=3, L=5, trials=10**4, seed=SEED, true_hypothesis=TRUTH)
    exp = build_experiment(base)
    out = {}
    for k, c in enumerate(C_GRID):
        t0 = time.perf_counter()
        cfg = base.replace(c=c)
        exp.cfg = cfg
        st = run_monte_carlo(cfg, cell=k, exp=exp)
        out[c] = (st, time.perf_counter() - t0)
    return exp.table.I[TRUTH], out


@pytest.fixture(scope="module")
def cct_runs():
    """CCT on generated topologies, L in {6, 10, 14}, c in {0.01, 0.001}."""
    out = {}
    for L in (6, 10, 14):
        for k, c in enumerate((0.01, 0.001)):
            cfg = ExperimentConfig(protocol="cct", M=3, L=L, c=c, trials=200, seed=SEED, true_hypothesis=TRUTH)
            out[L, c] = run_monte_carlo(cfg, cell=k, keep_records=True)
    return out


def test_criterion_01_dct_error(dct_grid):
    _, grid = dct_grid
    parts, ok = [], True
    for c in (0.1, 0.03, 0.01):
        st, secs = grid[c]
        good = st.err_hi <= 2 * c and secs <= 300
        ok &= good
        parts.append(f"c={c}: err={st.err_rate:.4f} wilson_hi={st.err_hi:.4f} <= {2 * c:g} ({secs:.1f}s)")
    report(1, ok, "; ".join(parts))


def test_criterion_02_dct_time_ratio(dct_grid):
    I, grid = dct_grid
    ratios = [float(grid[c][0].mean_N * I / abs(math.log(c))) for c in C_GRID]
    last = ratios[-1]
    in_band = 0.6 <= last <= 1.6
    closer = abs(last - 1) < abs(ratios[0] - 1)
    trend = monotone_with_inversions([abs(r - 1) for r in ratios], increasing=False)
    report(2, in_band and closer and trend,
           f"ratios {[round(r, 3) for r in ratios]}; in [0.6,1.6] at c=0.001: {in_band}; "
           f"closer to 1 than at c=0.1: {closer}; trend toward 1: {trend}")


def test_criterion_03_dct_comms(dct_grid):
    _, grid = dct_grid
    means = [grid[c][0].mean_comms for c in C_GRID]
    floor = min(grid[c][0].min_comms for c in C_GRID)
    ok = floor >= 4 and means[-1] <= 4.5 and monotone_with_inversions(means, increasing=False)
    report(3, ok, f"min per-sensor comms {floor}; means {[round(m, 4) for m in means]}")


def test_criterion_04_dct_second_moment(dct_grid):
    I, grid = dct_grid
    c = 0.001
    st = grid[c][0]
    lead2 = (abs(math.log(c)) / I) ** 2
    report(4, st.mean_N2 <= 2.5 * lead2, f"E[N^2]={st.mean_N2:.2f} vs 2.5*(|log c|/I)^2={2.5 * lead2:.2f} "
                                          f"(ratio {st.mean_N2 / lead2:.2f})")


def test_criterion_05_cct_consensus_error(cct_runs):
    worst, ok = 0.0, True
    for (L, c), st in cct_runs.items():
        for r in st.records:
            est = r.extra["est_final"]
            spread = float(np.max(est.max(axis=0) - est.min(axis=0)))
            worst = max(worst, spread / c)
            ok &= spread <= c
    report(5, ok, f"max spread / c over {sum(s.trials for s in cct_runs.values())} trials = {worst:.4f}")


def test_criterion_06_cct_phase1_duration(cct_runs):
    ok, parts = True, []
    for (L, c), st in sorted(cct_runs.items()):
        nc = max(r.N_c for r in st.records)
        ok &= all(r.N_c <= st.bound_Nc for r in st.records)
        parts.append(f"L={L},c={c}: N_c<={nc} bound={st.bound_Nc:.1f}")
    report(6, ok, "; ".join(parts))


def test_criterion_07_cct_phase3_soundness():
    cfg = ExperimentConfig(protocol="cct", M=3, L=10, c=0.01, trials=1000, seed=SEED, true_hypothesis="uniform")
    st = run_monte_carlo(cfg, log_events=True)
    failures = 0
    for r in st.records:
        finals = r.extra["finals"]
        agreed = len(set(finals.tolist())) == 1
        k = _lemma_round(r.extra["events"], cfg.L, int(finals[0]), r.N)
        failures += not (agreed and k is not None)
    report(7, failures == 0, f"{failures} failures over {st.trials} logged trials")


def test_criterion_08_cct_error():
    ok, parts = True, []
    for k, c in enumerate((0.03, 0.01)):
        cfg = ExperimentConfig(protocol="cct", M=3, L=10, c=c, trials=2000, seed=SEED, true_hypothesis=TRUTH)
        st = run_monte_carlo(cfg, cell=k)
        ok &= st.err_hi <= st.bound_err
        parts.append(f"c={c}: err={st.err_rate:.4f} wilson_hi={st.err_hi:.4f} <= {st.bound_err:.4f}")
    report(8, ok, "; ".join(parts))


def test_criterion_09_cct_time_bound():
    cfg = ExperimentConfig(protocol="cct", M=3, L=10, c=0.001, trials=1000, seed=SEED, true_hypothesis=TRUTH)
    st = run_monte_carlo(cfg)
    report(9, st.mean_N <= 1.5 * st.bound_EN, f"mean_N={st.mean_N:.2f} <= 1.5*{st.bound_EN:.2f}")


def _random_instance(rng):
    """Random connected graph (L in 2..12, edge density uniform) and a
    Bernoulli model with i.i.d. uniform parameters (M in 2..4)."""
    L = int(rng.integers(2, 13))
    g = random_connected_graph(L, rng, extra_p=float(rng.uniform(0, 1)))
    M = int(rng.integers(2, 5))
    p = rng.uniform(size=(M, L, M))
    model = ObservationModel(clamp_probs(np.stack([1 - p, p], axis=-1)))
    return g, model


def test_criterion_10_corollary_chain():
    rng = np.random.default_rng(SEED)
    bad_32 = bad_21 = 0
    held = [0, 0, 0]
    for _ in range(200):
        g, model = _random_instance(rng)
        I = PolicyCache(model).v.sum(axis=0)
        rep = check_cct_conditions(I, metropolis_weights(g), radius(g))
        held = [h + int(x) for h, x in zip(held, rep.holds)]
        bad_32 += rep.holds[2] and not rep.holds[1]
        bad_21 += rep.holds[1] and not rep.holds[0]
    report(10, bad_32 == 0 and bad_21 == 0,
           f"(iii) without (ii): {bad_32}; (ii) without (i): {bad_21}; times held (i,ii,iii) = {tuple(held)}")


def test_criterion_11_maximin_oracle():
    rng = np.random.default_rng(SEED)
    worst, bad = 0.0, 0
    for n in range(200):
        M = 2 + n % 3
        table = divergence_table(random_model(rng, M, 1), 0)
        scale = table.d.max()
        for i in range(M):
            gap = abs(solve_maximin(table, i).value - brute_force_maximin(table, i, 0.01).value)
            worst = max(worst, gap / scale)
            bad += gap > 0.01 * scale
    report(11, bad == 0, f"worst |lp - grid| / max entry = {worst:.5f} over 200 tables")


def test_criterion_12_weights():
    rng = np.random.default_rng(SEED)
    weights_bad, lemma_bad, complete = 0, 0, 0
    for _ in range(100):
        g = random_connected_graph(int(rng.integers(2, 31)), rng)
        W = metropolis_weights(g)
        weights_bad += not validate_weights(W, g).ok
        eta_h = ergodic_coefficient(np.linalg.matrix_power(W, radius(g)))
        lemma_bad += not 0 < eta_h < 1
        complete += g.is_complete()
    report(12, weights_bad == 0 and lemma_bad == 0,
           f"weight failures {weights_bad}/100; Lemma 1 failures {lemma_bad}/100 (complete graphs drawn: {complete})")


def test_criterion_13_trends(dct_grid):
    _, grid = dct_grid
    dct_c = [grid[c][0].mean_N for c in C_GRID]
    base = ExperimentConfig(M=3, seed=SEED, true_hypothesis=TRUTH)
    dct_L = [r.stats.mean_N for r in sweep(base.replace(protocol="dct", c=0.001, trials=2000), "L", [2, 4, 8, 16])]
    cct_c = [r.stats.mean_N for r in sweep(base.replace(protocol="cct", L=10, trials=300), "c", C_GRID)]
    cct_L = [r.stats.mean_N for r in
             sweep(base.replace(protocol="cct", c=0.001, trials=300), "L", [4, 8, 12, 16, 20])]
    checks = {
        "dct_vs_c": monotone_with_inversions(dct_c, increasing=True),
        "dct_vs_L": monotone_with_inversions(dct_L, increasing=False),
        "cct_vs_c": monotone_with_inversions(cct_c, increasing=True),
        "cct_vs_L": cct_L[-1] > cct_L[-2],
    }
    detail = (f"{checks}; DCT N(c)={[round(x, 2) for x in dct_c]}, DCT N(L=2,4,8,16)={[round(x, 2) for x in dct_L]}, "
              f"CCT N(c)={[round(x, 1) for x in cct_c]}, CCT N(L=4..20)={[round(x, 1) for x in cct_L]}")
    report(13, all(checks.values()), detail)
