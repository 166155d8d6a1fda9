import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def fixtures():
    return FIXTURES


@pytest.fixture(scope="session")
def gloss_pipeline():
    from hybridmt.pipeline import Pipeline, load_config

    return Pipeline(load_config(fixture_path("gloss.cfg")))


@pytest.fixture(scope="session")
def interlingua_pipeline():
    from hybridmt.pipeline import Pipeline, load_config

    return Pipeline(load_config(fixture_path("interlingua.cfg")))
