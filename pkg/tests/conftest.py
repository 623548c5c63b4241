import os
from pathlib import Path

import pytest

from disdict_wsd.wordnet_kb import parse_wordnet

FIXTURES = Path(__file__).parent / "fixtures"
TINY_WN = FIXTURES / "tiny_wn"
FULL_WN = Path(os.environ.get("DISDICT_WORDNET", "/root/data/wordnet-3.0"))


def have_full_wordnet() -> bool:
    return (FULL_WN / "data.noun").is_file()


@pytest.fixture(scope="session")
def tiny_graph():
    return parse_wordnet(TINY_WN)


@pytest.fixture(scope="session")
def full_graph():
    if not have_full_wordnet():
        pytest.skip(f"WordNet 3.0 not found at {FULL_WN} (set DISDICT_WORDNET)")
    return parse_wordnet(FULL_WN)


@pytest.fixture(scope="session")
def mini_world(tmp_path_factory):
    from disdict_wsd.synthetic import build_mini_world
    return build_mini_world(tmp_path_factory.mktemp("mini"))


# One line per acceptance criterion, collected by tests/test_acceptance.py.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
