import math
import time

import pytest
from hypothesis import HealthCheck, settings

from pbssc.config import load_config
from pbssc.harness import Mode, compare
from pbssc.model import VehicleParams

settings.register_profile(
    "default",
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# Filled by tests/test_acceptance.py: criterion number -> (passed, detail).
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def comparison(config):
    """Full mode x seed matrix on the reference trajectory, computed once per session."""
    t0 = time.perf_counter()
    comp = compare(config, range(config.seeds), keep_records=True)
    comp.elapsed = time.perf_counter() - t0
    return comp


@pytest.fixture(scope="session")
def pbssc_record(comparison):
    return comparison.records[(Mode.PBSSC, 0)]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def angle_close(a: float, b: float, tol: float = 1e-12) -> bool:
    return abs(math.remainder(a - b, 2 * math.pi)) <= tol
