"""Sequential multi-hypothesis testing with controlled sensing over sensor
networks: the single-sensor Chernoff test, a fusion-center variant, a
decentralized test with local triggering, and a consensus-based test with no
fusion center.
"""
from .cct import CctNetwork, read_events, run_cct_trial, write_events
from .chernoff import SensorBank, SensorTestState, build_fct_model, run_standard_test, step, worst_case_llr
from .dct import CapabilityTable, FusionState, dct_fusion_round, dct_initialize, dct_sensor_round, run_dct_trial
from .errors import (ChernoffNetError, ConfigurationError, ConnectivityError, DimensionError,
                     InfiniteDivergenceError, StepCapExceeded)
from .harness import (AggregateStats, ExperimentConfig, build_experiment, generate_bernoulli_model,
                      generate_topology, run_monte_carlo, stats_to_csv, sweep, theoretical_bounds)
from .maximin import ActionPMF, DivergenceTable, PolicyCache, brute_force_maximin, divergence_table, solve_maximin
from .network import (NetworkGraph, check_cct_conditions, complete_graph, diameter, ergodic_coefficient,
                      metropolis_weights, path_graph, radius, read_edge_list, ring_graph, spectral_radius,
                      star_graph, validate_weights)
from .probability import Categorical, ObservationModel, kl_divergence, log_likelihoods, sample
from .records import TrialRecord

__version__ = "0.1.0"
