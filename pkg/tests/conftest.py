import pytest

_ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def acceptance_line():
    """Record the one-line verdict of an acceptance criterion for the terminal summary."""

    def record(key: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} criterion {key}: {detail}"
        _ACCEPTANCE_LINES[key] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(_ACCEPTANCE_LINES, key=lambda k: (int(k.split()[0]), k)):
            terminalreporter.write_line(_ACCEPTANCE_LINES[key])
