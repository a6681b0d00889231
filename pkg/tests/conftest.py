import pytest

from singular_nls.approx import assemble_u0, choose_rho
from singular_nls.functional import FunctionalContext, landscape_constants
from singular_nls.grid import RadialGrid
from singular_nls.problem import simple_problem
from singular_nls.solver import minimize

# one line per acceptance criterion, filled by tests/test_acceptance.py
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(VERDICTS, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid3():
    return RadialGrid.build(3, align=choose_rho(3))


@pytest.fixture(scope="session")
def problem3():
    return simple_problem(3, 3.05)


@pytest.fixture(scope="session")
def approx3(grid3):
    return assemble_u0(3, 3.05, grid3)


@pytest.fixture(scope="session")
def ctx3(problem3, approx3):
    return FunctionalContext(problem3, approx3)


@pytest.fixture(scope="session")
def landscape3(ctx3):
    return landscape_constants(ctx3)


@pytest.fixture(scope="session")
def bundle3(ctx3, landscape3):
    return minimize(ctx3, landscape3, 1e-8)


@pytest.fixture(scope="session")
def coarse_grid3():
    return RadialGrid.build(3, per_decade=60, align=choose_rho(3))
