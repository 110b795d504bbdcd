import pytest

from szego_lab.numerics import Prec
from szego_lab.opuc import RogersSzego, SingleMoment
from szego_lab.szego import SzegoData


@pytest.fixture(scope="session")
def p256():
    return Prec(256)


@pytest.fixture(scope="session")
def p512():
    return Prec(512)


@pytest.fixture(scope="session")
def rs():
    return RogersSzego(0.25)


@pytest.fixture(scope="session")
def sm():
    return SingleMoment(0.8)


@pytest.fixture(scope="session")
def sd_rs(rs, p256):
    return SzegoData.from_sequence(rs, 200, p256)


@pytest.fixture(scope="session")
def sd_sm(sm, p256):
    return SzegoData.from_sequence(sm, 200, p256)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
