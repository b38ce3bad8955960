"""A single sensor choosing its own experiments.

Three hypotheses, three probing actions, Bernoulli observations. The sensor
keeps a cumulative log-likelihood per hypothesis, probes with the maximin
action mix of whichever hypothesis currently leads, and stops once the leader
beats the runner-up by |log c| nats.
"""
import math

import numpy as np

from chernoff_net import PolicyCache, generate_bernoulli_model, run_standard_test

model = generate_bernoulli_model(M=3, L=1, seed=0)
policy = PolicyCache(model)

print("P(observation = 1) per hypothesis (rows) and action (columns):")
print(np.round(model.probs[:, 0, :, 1], 3))
print()
for i in range(3):
    pmf = policy.pmfs[0][i]
    print(f"if h{i} leads: probe with q = {np.round(pmf.q, 3)}, guaranteed drift {pmf.value:.3f} nats/step")

rng = np.random.default_rng(1)
for c in (0.1, 0.01, 0.001):
    runs = [run_standard_test(model, abs(math.log(c)), 0, rng, policy) for _ in range(2000)]
    err = np.mean([d != 0 for d, _ in runs])
    mean_n = np.mean([n for _, n in runs])
    print(f"c={c:<6} error rate {err:.4f} (bound {2 * c:.3f})   "
          f"E[N]={mean_n:6.2f}   |log c|/v = {abs(math.log(c)) / policy.v[0, 0]:.2f}")
