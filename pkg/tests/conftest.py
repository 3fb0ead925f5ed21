import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=150,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def m2():
    from nodalbif.weights import sine

    return sine(2)


@pytest.fixture(scope="session")
def a_weight():
    from nodalbif.weights import paper_a

    return paper_a()


@pytest.fixture(scope="session")
def nl_grid():
    from nodalbif.continuation import nonlinear_grid

    return nonlinear_grid()


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_report(request):
    """Record (and print) the verdict line of one acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def report(number: int, title: str, passed: bool, detail: str):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        store[number] = line
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for k in sorted(store):
            terminalreporter.write_line(store[k])
