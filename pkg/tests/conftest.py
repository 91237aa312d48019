"""Shared fixtures: small, fast configurations for unit tests."""

import pytest

from epictrl.config import FullConfig


@pytest.fixture
def small_cfg() -> FullConfig:
    """2000 agents, pop_scale 1, ten seeded infections."""
    cfg = FullConfig()
    cfg.population.pop_size = 2000
    cfg.population.total_pop = 2000.0
    cfg.population.pop_infected = 10.0
    return cfg


@pytest.fixture
def tiny_cfg() -> FullConfig:
    """300 agents for tests where epidemic realism does not matter."""
    cfg = FullConfig()
    cfg.population.pop_size = 300
    cfg.population.total_pop = 300.0
    cfg.population.pop_infected = 5.0
    return cfg
