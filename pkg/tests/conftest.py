from pathlib import Path

import numpy as np
import pytest

from meshplan.instance import (
    PlanningInstance,
    RadioParams,
    build_grid_instance,
    load_instance,
)
from meshplan.model import FEAS_TOL, Solution, check_constraints

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def standard_instance():
    """The reference 6x6 scenario: 200 demand points at 2 Mb/s each."""
    return build_grid_instance(6, 6, n_dps=200, radio=RadioParams(), seed=0)


@pytest.fixture(scope="session")
def toy_instance():
    """The committed 4-site toy small enough for exhaustive enumeration."""
    return load_instance(FIXTURES / "toy2x2_instance.json")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_line_instance(n_sites: int, dp_sites=(0,), traffic=2.0, **overrides):
    """Sites in a row at unit spacing; one demand point on each listed site."""
    sites = np.array([(float(j), 0.0) for j in range(n_sites)])
    dp_positions = np.array([sites[j] for j in dp_sites], dtype=np.float64)
    params = dict(
        rows=1,
        cols=n_sites,
        spacing=1.0,
        sites=sites,
        dp_positions=dp_positions,
        dp_traffic=np.full(len(dp_sites), traffic),
        coverage_radius=0.3,
        backbone_range=1.0,
        R=2,
        K=2,
        C_max=54.0,
        A=3,
        M=1000.0,
        seed=0,
    )
    params.update(overrides)
    return PlanningInstance(**params)


def make_square_instance(dp_sites=(0,), traffic=2.0, **overrides):
    """A 2x2 unit square: backbone is the 4-cycle 0-1-3-2-0."""
    sites = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    dp_positions = np.array([sites[j] for j in dp_sites], dtype=np.float64)
    params = dict(
        rows=2,
        cols=2,
        spacing=1.0,
        sites=sites,
        dp_positions=dp_positions,
        dp_traffic=np.full(len(dp_sites), traffic),
        coverage_radius=0.3,
        backbone_range=1.0,
        R=2,
        K=2,
        C_max=54.0,
        A=3,
        M=1000.0,
        seed=0,
    )
    params.update(overrides)
    return PlanningInstance(**params)


def assert_flow_conserved(solution: Solution, instance: PlanningInstance):
    """Canonical per-node balance and total-throughput identity, both at 1e-9."""
    loads = solution.site_loads(instance)
    inflow = solution.f.sum(axis=(0, 2))
    outflow = solution.f.sum(axis=(1, 2))
    residual = loads + inflow - outflow - solution.F
    assert np.abs(residual).max() <= FEAS_TOL
    assert abs(solution.F.sum() - loads.sum()) <= FEAS_TOL


def assert_feasible(solution: Solution, instance: PlanningInstance):
    report = check_constraints(solution, instance)
    assert report.feasible, [c.id for c in report.failed()]
    assert_flow_conserved(solution, instance)
