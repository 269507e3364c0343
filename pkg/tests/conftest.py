"""Test configuration for pytest"""

import os

import pytest

# Keep tests independent of any developer .env
os.environ.setdefault("CSMA_WORKERS", "2")
os.environ.setdefault("CSMA_LOG_LEVEL", "WARNING")


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are cached; every test starts from the current environment"""
    from src.config import get_settings

    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def mock_settings():
    """Fixture providing mock settings with the default caps"""
    from unittest.mock import MagicMock

    settings = MagicMock()
    settings.workers = 2
    settings.seed_base = 0
    settings.enumeration_cap = 20
    settings.conductance_state_cap = 22
    settings.mws_cap = 32
    settings.mws_every = 100
    settings.record_every = 1
    settings.log_level = "WARNING"
    return settings


@pytest.fixture
def k2():
    from src.network.conflict_graph import complete_graph

    return complete_graph(2)


@pytest.fixture
def path3():
    from src.network.conflict_graph import path_graph

    return path_graph(3)


@pytest.fixture
def single_link():
    from src.network.conflict_graph import ConflictGraph

    return ConflictGraph(1, {1: []})


@pytest.fixture(scope="session")
def grid():
    from src.network.conflict_graph import build_grid_4x4

    return build_grid_4x4()


@pytest.fixture
def rng():
    from src.scheduling.glauber import SeededRng

    return SeededRng(12345)
