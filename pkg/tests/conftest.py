from pathlib import Path

import pytest


@pytest.fixture
def datadir() -> Path:
    return Path(__file__).parent / "data"


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.REPORT:
        terminalreporter.write_line(line)
