import numpy as np
import pytest

from stressflex.polytope import cone, make_named

ACCEPTANCE_LINES = []


@pytest.fixture
def cube():
    return make_named("cube")


@pytest.fixture
def coned_cube(cube):
    return cone(cube, cube.centroid)


@pytest.fixture
def tetrahedron():
    return make_named("tetrahedron")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
