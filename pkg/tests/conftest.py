import functools
import sys
from pathlib import Path

import pytest

from hybridhoare.textio import parse_formula, parse_network, parse_triple
from hybridhoare.wp import close_cycle, wp_path

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


@functools.lru_cache(maxsize=None)
def lac():
    return parse_network(fixture_text("lacI.net"))


@functools.lru_cache(maxsize=None)
def osc():
    return parse_triple(fixture_text("osc.triple"), lac())


@functools.lru_cache(maxsize=None)
def osc_wp():
    """Backward run on the oscillation triple, then the closed cycle."""
    res = wp_path(lac(), osc().path, osc().post)
    return res, close_cycle(lac(), res)


@functools.lru_cache(maxsize=None)
def golden(name: str):
    return parse_formula(fixture_text(f"golden_{name}.txt"))


GOLDEN_NAMES = ("h1", "h2", "h3", "h4", "hf")


def generated(name: str):
    """Generated hybrid formula matching a golden file name."""
    res, closed = osc_wp()
    if name == "hf":
        return closed.h
    # steps run backwards: H4 is computed first
    by_index = {s.index: s for s in res.steps}
    return by_index[int(name[1])].h


@pytest.fixture
def grn():
    return lac()


@pytest.fixture
def triple():
    return osc()


# acceptance lines collected by test_acceptance.report
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
