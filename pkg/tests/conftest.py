import os

os.environ.setdefault("OMP_NUM_THREADS", "1")

import pytest  # noqa: E402

_GATE = pytest.StashKey[list]()


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the full-scale replication (hours)")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale run, enabled with --runslow")
    config.stash[_GATE] = []


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="full-scale run; pass --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_GATE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def gate(request):
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_GATE].append((number, line))
        return ok

    return record
