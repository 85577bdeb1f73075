import json
from pathlib import Path

import pytest

ORACLE_PATH = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def oracles():
    return json.loads(ORACLE_PATH.read_text())


def rel_err(got, want):
    return abs(got - want) / max(abs(want), 1e-300)


# (criterion number, passed, detail) recorded by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
