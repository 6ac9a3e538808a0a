import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, title, failures):
        status = "PASS" if not failures else "FAIL"
        line = f"{status}  criterion {number}: {title}"
        if failures:
            line += "\n" + "\n".join(f"        - {f}" for f in failures)
        request.config.stash[_ACCEPTANCE][number] = line
        assert not failures, f"criterion {number} failed: " + "; ".join(failures)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
