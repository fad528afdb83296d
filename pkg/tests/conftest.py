import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bapcs.censoring import simulate_block
from bapcs.distributions import IepParams
from bapcs.gof import load_carbon_fibres
from bapcs.harness import builtin_setup

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TRUTH = IepParams(3.5, 2.25)

# filled by tests/test_acceptance.py, reported at the end of the session
ACCEPTANCE_RESULTS = {}


def setup_sample(seed, setup_id=1, plan=1, params=TRUTH):
    design = builtin_setup(setup_id, plan)
    return simulate_block([params] * design.k, design, np.random.default_rng(seed))


@pytest.fixture(scope="session")
def carbon():
    return load_carbon_fibres()


@pytest.fixture
def sample1():
    return setup_sample(20240601)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
