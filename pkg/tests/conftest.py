from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
SAMPLES = ROOT / "samples"

# one line per acceptance criterion, printed in the terminal summary
CRITERIA: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str) -> None:
    CRITERIA[number] = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    print(CRITERIA[number])


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])


@pytest.fixture
def samples() -> Path:
    return SAMPLES
