import functools

import pytest

from nervecraft.constants import derive_multiplicity_constants
from nervecraft.metric_core import bumpy_torus, flat_torus, round_sphere, thin_cylinder
from nervecraft.pipeline import run_stages

STANDARD = {
    "flat_torus": lambda: flat_torus(1, 100),
    "round_sphere": lambda: round_sphere(1, 64),
    "thin_cylinder": lambda: thin_cylinder(1e-3, 10, 32),
}


@functools.lru_cache(maxsize=None)
def instance(name):
    if name == "bumpy_torus":
        return bumpy_torus(1, 50)
    return STANDARD[name]()


@functools.lru_cache(maxsize=None)
def stages(name):
    M = instance(name)
    return run_stages(M, derive_multiplicity_constants(M.n))


@pytest.fixture(scope="session")
def C2():
    return derive_multiplicity_constants(2)


@pytest.fixture(scope="session")
def torus_stages():
    return stages("flat_torus")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
