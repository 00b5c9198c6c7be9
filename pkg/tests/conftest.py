import functools

import pytest
from hypothesis import HealthCheck, settings

from returnlab.generators import Bernoulli, generate

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DESK_LENGTH = 10_000_000


@functools.lru_cache(maxsize=None)
def desk_sample(spec, length=DESK_LENGTH, seed=20240611):
    """One shared sample per (spec, length, seed); generation is deterministic."""
    return generate(spec, length, seed)


@pytest.fixture(scope="session")
def bernoulli_desk():
    return desk_sample(Bernoulli((0.5, 0.5)))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
