import pytest

_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    """``verdict(n, ok, detail)`` records one PASS/FAIL line for criterion ``n``."""
    table = request.config.stash[_VERDICTS]

    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        table[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_VERDICTS, {})
    if table:
        terminalreporter.section("acceptance criteria")
        for n in sorted(table):
            terminalreporter.write_line(table[n])
