import numpy as np
import pytest

from chernoff_net import ObservationModel


def bernoulli_model(p_success, L=1, K=None):
    """Model where hypothesis ``i`` gives Bernoulli(p_success[i]) on every
    sensor and every action."""
    p = np.asarray(p_success, dtype=float)
    M = p.size
    K = K or M
    probs = np.empty((M, L, K, 2))
    probs[..., 0] = (1 - p)[:, None, None]
    probs[..., 1] = p[:, None, None]
    return ObservationModel(probs)


def random_model(rng, M, L, K=None, A=3, floor=0.02):
    K = K or M
    probs = rng.dirichlet(np.ones(A), size=(M, L, K))
    probs = np.clip(probs, floor, None)
    return ObservationModel(probs / probs.sum(axis=-1, keepdims=True))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
