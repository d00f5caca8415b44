import pathlib

import pytest

from tbnet.graph import BuildConfig, build_graph
from tbnet.parser import parse_net

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def load(name: str):
    return parse_net((FIXTURES / f"{name}.tb").read_text())


@pytest.fixture(scope="session")
def fig1_net():
    return load("fig1")


@pytest.fixture(scope="session")
def fig3_net():
    return load("fig3")


@pytest.fixture(scope="session")
def fig1_graph(fig1_net):
    return build_graph(fig1_net, BuildConfig(ta_enabled=True))


@pytest.fixture(scope="session")
def fig3_graph(fig3_net):
    return build_graph(fig3_net, BuildConfig(ta_enabled=True))
