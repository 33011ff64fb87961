from functools import lru_cache
from pathlib import Path

import pytest

from ncgn.ribbon_graph import enumerate_graphs, parse_graph

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.graph"


def load(name: str, relaxed: bool = False):
    return parse_graph(fixture_path(name).read_text(), relaxed=relaxed)


@lru_cache(maxsize=None)
def small_graphs(n: int):
    return tuple(enumerate_graphs(n))


def all_small_graphs(max_n: int = 3):
    return [g for n in range(1, max_n + 1) for g in small_graphs(n)]


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
