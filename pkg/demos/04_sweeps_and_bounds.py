"""Sweeps with theory alongside, written out as CSV.

Runs a cost sweep for the decentralized test and a network-size sweep for the
consensus test, printing each row next to the bound the theory predicts.
"""
import sys

from chernoff_net import ExperimentConfig, stats_to_csv, sweep

dct = sweep(ExperimentConfig(protocol="dct", M=3, L=5, trials=1000, seed=0), "c", [0.1, 0.01, 0.001])
cct = sweep(ExperimentConfig(protocol="cct", M=3, c=0.01, trials=100, seed=0), "L", [4, 8, 12])

for row in dct + cct:
    st = row.stats
    nc = "" if st.mean_Nc is None else f" N_c={st.mean_Nc:.0f} (<= {st.bound_Nc:.0f})"
    print(f"{st.protocol} L={st.L:<3} c={st.c:<6g} err={st.err_rate:.4f} (<= {st.bound_err:.4f}) "
          f"E[N]={st.mean_N:7.2f} leading term {st.bound_EN:7.2f}{nc}")

print()
stats_to_csv(dct + cct, sys.stdout)
