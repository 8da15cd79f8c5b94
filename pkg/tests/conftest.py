import numpy as np
import pytest

from tikholearn.model import build_forward_model
from tikholearn.sampling import make_rng, random_basis


@pytest.fixture
def rng():
    return make_rng(12345)


def random_operator(rng, m, d, s):
    """``U diag(s) V^T`` with seeded orthonormal factors."""
    r = len(s)
    u = random_basis(m, r, rng)
    v = random_basis(d, r, rng)
    return (u * np.asarray(s, dtype=float)) @ v.T


@pytest.fixture
def decay_model(rng):
    return build_forward_model(random_operator(rng, 30, 40, 0.9 ** np.arange(30)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
