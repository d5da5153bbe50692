import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20170324)


def random_physical(rng, n, dim=2):
    """Mix of pure and full-rank random states."""
    from dmsim.states import density_from_pure, random_density, random_pure_state

    out = []
    for k in range(n):
        if k % 2:
            out.append(random_density(rng, dim))
        else:
            out.append(density_from_pure(random_pure_state(rng, dim)))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
