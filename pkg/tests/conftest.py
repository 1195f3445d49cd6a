import pytest

from bushtype.algebra import build_field
from bushtype.bushmat import assemble_bush
from bushtype.geometry import regular_spread
from bushtype.turyn import build_for_m
from bushtype.typeq import search_spread_pair


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False, help="run slow non-gating checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "extended: slow non-gating check, enabled with --extended")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="needs --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


_CERTS = {}


def certificate(p):
    if p not in _CERTS:
        _CERTS[p] = search_spread_pair(regular_spread(build_field(p)))
    return _CERTS[p]


@pytest.fixture(scope="session")
def cert3():
    return certificate(3)


@pytest.fixture(scope="session")
def cert5():
    return certificate(5)


@pytest.fixture(scope="session")
def build3():
    return build_for_m(3, certificate)


@pytest.fixture(scope="session")
def build5():
    return build_for_m(5, certificate)


@pytest.fixture(scope="session")
def build9():
    return build_for_m(9, certificate)


@pytest.fixture(scope="session")
def bush324(build3):
    return assemble_bush(build3.hds, build3.subgroup, build3.klein_pair)


@pytest.fixture(scope="session")
def bush2500(build5):
    return assemble_bush(build5.hds, build5.subgroup, build5.klein_pair)
