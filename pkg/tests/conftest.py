"""Shared corpus loaders for the test suite."""
from pathlib import Path

import pytest

from mpst import parse_gglobal, parse_global, parse_local, parse_system

DATA = Path(__file__).parent / "data"


def load(name: str) -> str:
    return (DATA / name).read_text()


@pytest.fixture(scope="session")
def commit_type():
    return parse_global(load("commit.gt"))


@pytest.fixture(scope="session")
def commit_system():
    return parse_system(load("commit.cfsm"))


@pytest.fixture(scope="session")
def remark_abc():
    return parse_system(load("remark_abc.cfsm"))


@pytest.fixture(scope="session")
def remark_aprime():
    return parse_system(load("remark_aprime.cfsm"))


@pytest.fixture(scope="session")
def buyer_seller():
    return parse_system(load("buyer_seller.cfsm"))


@pytest.fixture(scope="session")
def deadlock_system():
    return parse_system(load("deadlock.cfsm"))


@pytest.fixture(scope="session")
def race_system():
    return parse_system(load("race.cfsm"))


@pytest.fixture(scope="session")
def uninformed_system():
    return parse_system(load("uninformed.cfsm"))


@pytest.fixture(scope="session")
def data_transfer_type():
    return parse_gglobal(load("data_transfer.ggt"))


@pytest.fixture(scope="session")
def commit_c_type():
    return parse_local(load("commit_c.lt"))
