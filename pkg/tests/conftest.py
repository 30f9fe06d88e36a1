import sys

import pytest

from pertfix.catalog import builtin
from pertfix.config import parse_config
from pertfix.space import sample_points


def load_entry(entry_id):
    cfg = parse_config(builtin(entry_id).to_config())
    return cfg


@pytest.fixture(scope="session")
def jleli():
    return load_entry("jleli-phi")


@pytest.fixture(scope="session")
def kannan():
    return load_entry("kannan-step")


@pytest.fixture(scope="session")
def quarter():
    return load_entry("banach-quarter")


@pytest.fixture(scope="session")
def identity():
    return load_entry("identity-noncontractive")


@pytest.fixture(scope="session")
def jleli_samples(jleli):
    return sample_points(jleli.space, jleli.counts, 42, jleli.T)


@pytest.fixture(scope="session")
def kannan_samples(kannan):
    return sample_points(kannan.space, kannan.counts, 42, kannan.T)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.summary_line(i))
