import numpy as np
import pytest

from udisc.ensemble import gram, random_ensemble, validate
from udisc.feasible import ray_to_surface

SQ5, SQ17 = np.sqrt(5.0), np.sqrt(17.0)
REF_STATES = [
    [1.0, 0.0, 0.0],
    [1 / SQ5, 2 / SQ5, 0.0],
    [2 / SQ17, 2 / SQ17, 3 / SQ17],
]

ACCEPTANCE_LINES = []


def ref_ensemble(priors):
    return validate(REF_STATES, priors)


def interior_instance(rng, n):
    """Random states and priors whose optimum is a given interior surface point."""
    e = random_ensemble(n, rng=rng)
    X = gram(e).entries
    p = ray_to_surface(X, rng.random(n) + 0.05, method="eig")
    u = np.linalg.eigh(X - np.diag(p))[1][:, 0]
    return e.with_priors(np.abs(u) ** 2), p


def hub_instance(rng, n, scale=0.25):
    """Hub state 0 overlapping orthogonal spokes 1..n-1 in dimension n."""
    amp = (rng.random(n - 1) * scale + 0.02) * np.exp(2j * np.pi * rng.random(n - 1))
    hub = np.append(amp, np.sqrt(1 - np.sum(np.abs(amp) ** 2)))
    states = [hub] + [np.eye(n)[k] for k in range(n - 1)]
    return states


@pytest.fixture
def ref_gram():
    return gram(ref_ensemble((1 / 3, 1 / 3, 1 / 3))).entries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
