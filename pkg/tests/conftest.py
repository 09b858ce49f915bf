from __future__ import annotations

import importlib.resources

import pytest

from eventagg.config import load_config
from eventagg.pipeline import run_events
from eventagg.scenario import generate, load_scenario


@pytest.fixture(scope="session")
def data_dir():
    return importlib.resources.files("eventagg") / "data"


@pytest.fixture(scope="session")
def fig7(data_dir):
    """(config, patterns) for the bundled three-sensor scenario."""
    return load_config(data_dir / "fig7.yaml")


@pytest.fixture(scope="session")
def fig7_config(fig7):
    return fig7[0]


@pytest.fixture(scope="session")
def fig7_patterns(fig7):
    return fig7[1]


@pytest.fixture(scope="session")
def fig7_events(data_dir, fig7_config):
    spec = load_scenario(data_dir / "fig7.scenario")
    return generate(spec, fig7_config.sensors)


@pytest.fixture(scope="session")
def fig7_result(fig7_events, fig7_config):
    return run_events(fig7_events, fig7_config, compute_quality=True)
