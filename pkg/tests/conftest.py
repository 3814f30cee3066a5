import pytest

RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, ok, detail)``."""
    store = request.config.stash[RESULTS]

    def record(num: int, ok: bool, detail: str):
        prev = store.get(num)
        # several tests may feed one criterion; any failure sticks
        if prev is not None:
            ok = ok and prev[0]
            detail = prev[1] + "; " + detail
        store[num] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(store):
        ok, detail = store[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
