import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Append one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, seconds: float, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number}: {status}  {title}  ({seconds:.2f} s)"
        if detail:
            line += f"  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
