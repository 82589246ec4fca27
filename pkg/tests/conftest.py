import pytest

from ppktp_spdc.dispersion import default_crystal, load_sellmeier
from ppktp_spdc.phasematch import PumpSpec, degenerate_angle


@pytest.fixture(scope="session")
def sellmeier():
    return load_sellmeier()


@pytest.fixture(scope="session")
def crystal():
    return default_crystal()


@pytest.fixture(scope="session")
def pump():
    return PumpSpec()


@pytest.fixture(scope="session")
def theta95(crystal, pump):
    """Degenerate external angle at 95 degC on the xy-plane, used as the collection-mode angle."""
    return degenerate_angle(95.0, "xy", crystal, pump)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record a criterion's sub-checks; returns True when all pass."""
    log = request.config.stash[ACCEPTANCE_KEY]

    def record(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{text} [{'ok' if passed else 'FAIL'}]" for text, passed in checks)
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}: {detail}"
        log[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_KEY, {})
    if log:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(log):
            terminalreporter.write_line(log[number])
