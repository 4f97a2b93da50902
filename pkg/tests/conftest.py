import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(id, label, passed, detail)``."""
    def record(cid, label, passed, detail=""):
        ACCEPTANCE_LINES.append((cid, label, bool(passed), detail))
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid, label, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda r: (int(r[0].split(".")[0]), r[0])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  [{cid}] {label}: {detail}")
