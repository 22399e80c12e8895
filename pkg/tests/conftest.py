import time

import pytest

_VERDICTS = {}


class Verdict:
    """Collects one PASS/FAIL line per acceptance criterion, including its time limit."""

    def __init__(self, number, title, limit_s):
        self.number, self.title, self.limit_s = number, title, limit_s
        self.t0 = time.perf_counter()

    def finish(self, ok, detail):
        elapsed = time.perf_counter() - self.t0
        in_time = elapsed < self.limit_s
        passed = bool(ok) and in_time
        timing = f"{elapsed:.2f}s < {self.limit_s:g}s" if in_time else f"{elapsed:.2f}s exceeds {self.limit_s:g}s"
        line = f"[{'PASS' if passed else 'FAIL'}] {self.number:>2}. {self.title}: {detail} ({timing})"
        _VERDICTS[self.number] = line
        print(line)
        assert passed, line


@pytest.fixture
def verdict():
    return Verdict


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[n])
