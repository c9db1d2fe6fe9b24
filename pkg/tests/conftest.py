import warnings

import pytest

from spinnoise.hamiltonian import PerturbativeRegimeWarning, SimParams


@pytest.fixture
def base_params():
    return SimParams()


@pytest.fixture(autouse=True)
def _quiet_regime_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeRegimeWarning)
        yield


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def report(label: str, ok: bool, detail: str, elapsed: float, limit: float):
        within = elapsed <= limit
        status = "PASS" if ok and within else "FAIL"
        line = f"[{status}] criterion {label}: {detail} (runtime {elapsed:.1f} s, limit {limit:g} s)"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
        assert within, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
