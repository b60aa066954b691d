import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_record():
    """Record a pass/fail verdict line for one acceptance criterion."""

    def record(criterion: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        line = f"[ACCEPTANCE] {criterion}: {status}"
        if detail:
            line += f" — {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
