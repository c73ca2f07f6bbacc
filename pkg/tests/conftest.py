import pytest

from bayesvar import ChainConfig


@pytest.fixture
def quick_cfg():
    """Short chains for tests that only need a working sampler."""
    return ChainConfig(length=2000, burn_in=500, thin=5, seed=3)


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line; the lines are printed at the end of the run."""

    def _report(label, ok, detail):
        _ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
