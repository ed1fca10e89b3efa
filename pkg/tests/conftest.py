import numpy as np
import pytest


def random_directions(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def random_cost(rng, n):
    """Geodesic cost between random points on the sphere, exactly symmetric."""
    d = random_directions(rng, n)
    c = np.arccos(np.clip(d @ d.T, -1.0, 1.0))
    c = np.triu(c, 1)
    return c + c.T


def random_instance(rng, n):
    return rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n)), random_cost(rng, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion stays in the test."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
