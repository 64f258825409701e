import pytest

from network.presets import build_preset


@pytest.fixture
def lens_net():
    return build_preset("lens", area=0.3, h=0.02)


@pytest.fixture
def theta_net():
    return build_preset("theta", area=1.0, h=0.02)


@pytest.fixture
def island_net():
    return build_preset("island", area=0.2, h=0.02)


@pytest.fixture(scope="session")
def atlas():
    from atlas.shrinkers import catalog

    return catalog()
