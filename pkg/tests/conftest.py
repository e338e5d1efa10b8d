import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """Record ``(passed, detail)`` for an acceptance criterion."""

    def record(number, passed, detail):
        _RESULTS[str(number)] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    def key(k):
        return (int(k.rstrip("p")), k)
    for k in sorted(_RESULTS, key=key):
        passed, detail = _RESULTS[k]
        terminalreporter.write_line(f"criterion {k:>3}: {'PASS' if passed else 'FAIL'}  {detail}")
