import pytest

from sectorheat import (GridSpec, KernelPlan, SectorSpec, build_psi_cache)

# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def setup11():
    """Workhorse 1-D anti-symmetric configuration: N=1, m=1, gamma=0.5,
    alpha=0.5 (subcritical, sigma = 0.8)."""
    spec = SectorSpec(1, 1, 0.5, 0.5, +1)
    grid = GridSpec.for_spec(spec, L=10.0, n=256)
    plan = KernelPlan(spec, grid)
    cache = build_psi_cache(spec, grid, plan)
    return spec, grid, plan, cache


@pytest.fixture(scope="session")
def setup10():
    """1-D radial configuration: N=1, m=0, gamma=0.5, alpha=1
    (subcritical: 2/(gamma+m) = 4)."""
    spec = SectorSpec(1, 0, 0.5, 1.0, +1)
    grid = GridSpec.for_spec(spec, L=10.0, n=512)
    plan = KernelPlan(spec, grid)
    cache = build_psi_cache(spec, grid, plan)
    return spec, grid, plan, cache
