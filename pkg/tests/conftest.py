import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qkdlab.channel import PRESETS  # noqa: E402


@pytest.fixture
def gys():
    return PRESETS["GYS"]


@pytest.fixture
def t8():
    return PRESETS["T8"]


@pytest.fixture
def kth():
    return PRESETS["KTH"]


def pytest_terminal_summary(terminalreporter):
    verdicts = getattr(sys.modules.get("test_acceptance"), "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for line in verdicts:
            terminalreporter.write_line(line)
