import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def bank64():
    from scalesteer.frame import build_filter_bank
    return build_filter_bank(64, 3)


@pytest.fixture(scope="session")
def bank128():
    from scalesteer.frame import build_filter_bank
    return build_filter_bank(128, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance results, printed as one line per criterion at the end of the run
_RESULTS: dict = {}


def record(criterion, ok: bool, detail: str):
    _RESULTS[str(criterion)] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS, key=lambda s: (int(s[0]), s)):
        ok, detail = _RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
