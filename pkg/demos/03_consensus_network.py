"""No fusion center: ten sensors on a ring with pendants.

Phase 1 averages capability vectors until every sensor can certify local
agreement, Phase 2 runs local tests against the estimated shares, and Phase 3
spreads agreement counters until a sensor is sure everyone holds the same
decision, then floods the verdict.
"""
import numpy as np

from chernoff_net import (PolicyCache, check_cct_conditions, diameter, ergodic_coefficient, generate_bernoulli_model,
                          generate_topology, metropolis_weights, radius, run_cct_trial, validate_weights)
from chernoff_net.harness import phase1_duration_bound

L, c = 10, 0.01
graph = generate_topology(L, seed=0)
model = generate_bernoulli_model(3, L, seed=0)
policy = PolicyCache(model)
W = metropolis_weights(graph)
h, d = radius(graph), diameter(graph)
eta_h = ergodic_coefficient(np.linalg.matrix_power(W, h))

print(f"edges: {sorted(graph.edges)}")
print(f"diameter {d}, radius {h}, eta(W) {ergodic_coefficient(W):.3f}, eta(W^h) {eta_h:.3f}")
print(f"weights valid: {validate_weights(W, graph).ok}")
rep = check_cct_conditions(policy.v.sum(axis=0), W, h)
print(f"sufficient conditions (i, ii, iii): {rep.holds}")
print()

rec = run_cct_trial(model, graph, c, true_hypothesis=2, rng=np.random.default_rng(3), W=W, policy=policy,
                    log_events=True)
print(f"decision h{rec.decision}, all sensors agree: {rec.extra['agreed']}")
print(f"Phase 1 finished by round {rec.N_c} (bound {phase1_duration_bound(c, policy.v.sum(axis=0), L, h, d, eta_h):.1f}),"
      f" everyone halted by round {rec.N}")
est = rec.extra["est_final"]
print(f"true I = {np.round(policy.v.sum(axis=0), 4)}; worst estimate error {np.abs(est - policy.v.sum(axis=0)).max():.2e}")
print("messages per sensor by type:")
for kind, counts in rec.comms_by_type.items():
    print(f"  {kind:12s} {counts}")

print()
print("first Phase-3 rounds of sensor 0:")
for row in [e for e in rec.extra["events"] if e[1] == 0 and e[2] == "phase3"][:6]:
    rnd, _, _, dec, x, dd, *_ = row
    print(f"  round {rnd}: decision {dec}, x={x}, d={dd}")
