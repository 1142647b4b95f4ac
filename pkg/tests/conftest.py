import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

GOLDEN = TESTS / "data" / "golden"
TAGGER = TESTS / "taggers" / "fake_tagger.py"


def tagger_command(mode: str) -> tuple[str, ...]:
    return (sys.executable, str(TAGGER), mode)


@pytest.fixture
def golden() -> Path:
    return GOLDEN


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, elapsed, detail in module.RESULTS:
        line = f"{'PASS' if ok else 'FAIL'}  {name}  ({elapsed:.2f} s)"
        if detail:
            line += f"  {detail}"
        terminalreporter.write_line(line)
