"""Pytest configuration for krylov-agp tests."""

import numpy as np
import pytest

from krylov_agp.operators import PauliSum


@pytest.fixture
def mock_tty(monkeypatch):
    """Fixture to simulate a TTY environment."""
    import io
    import sys

    class MockTTY(io.StringIO):
        def isatty(self):
            return True

    mock_stderr = MockTTY()
    monkeypatch.setattr(sys, "stderr", mock_stderr)
    monkeypatch.setenv("TERM", "xterm-256color")
    monkeypatch.delenv("NO_COLOR", raising=False)
    monkeypatch.delenv("KRYLOV_AGP_NO_STATUS", raising=False)

    return mock_stderr


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_pauli_sum(rng):
    """Factory for random Hermitian Pauli sums on ``n_sites``."""

    def make(n_sites: int = 3, n_terms: int = 8) -> PauliSum:
        limit = 1 << n_sites
        x = rng.integers(0, limit, size=n_terms)
        z = rng.integers(0, limit, size=n_terms)
        return PauliSum(n_sites, x, z, rng.normal(size=n_terms))

    return make


@pytest.fixture
def no_status(monkeypatch):
    """Keep sweeps from drawing a status line."""
    monkeypatch.setenv("KRYLOV_AGP_NO_STATUS", "1")
