import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

TOY_CITY = os.path.join(os.path.dirname(__file__), "..", "data", "toy_city")


@pytest.fixture(scope="session")
def toy_city_dir():
    return os.path.abspath(TOY_CITY)


@pytest.fixture(scope="session")
def toy_scenario(toy_city_dir):
    from fourstep.pipeline import ScenarioConfig

    return ScenarioConfig.load(os.path.join(toy_city_dir, "scenario.yaml"))


@pytest.fixture(scope="session")
def toy_run(toy_scenario, tmp_path_factory):
    """One pipeline run shared by tests that only read its artifacts."""
    from fourstep.pipeline import run_pipeline

    out = tmp_path_factory.mktemp("toy_run")
    summaries = run_pipeline(toy_scenario, str(out))
    return str(out), summaries
