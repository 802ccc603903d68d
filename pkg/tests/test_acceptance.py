"""
Acceptance runs against the Monte Carlo oracle (slow; run with -m slow)
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from src.core.cell import (CellScenario, LinkBudgets, UserPosition, estimate_failure_at,
                           failure_prob_at, optimize_relays, urban_blockers)
from src.core.geom2d import Point2
from src.core.mc import SampleRegion, estimate_p_all_blocked
from src.core.multilink import LinkSet, QuadratureSpec, compare_correlation
from src.core.shapes import Link, ScalarDist, ShapeDistribution, p_blocked

pytestmark = pytest.mark.slow

BS = Point2(0.0, 0.0)
QUAD = QuadratureSpec(nodes_l=8, nodes_w=8, nodes_h=4, nodes_theta=12, workers=4)


def ue_link(d, phi=0.0):
    return Link(BS, Point2(d * math.cos(phi), d * math.sin(phi)), 40.0, 1.5)


def sector_study_scenario():
    square = ShapeDistribution(ScalarDist.deterministic(15.0), ScalarDist.deterministic(15.0),
                               ScalarDist.uniform(30.0), ScalarDist.uniform(math.pi), 1e-4)
    return CellScenario(shapes=square, relay_radius=180.0, relay_height=20.0)


@pytest.mark.parametrize("density", [1e-4, 2.2e-4])
@pytest.mark.parametrize("d", [0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0])
def test_single_link_matches_simulation(density, d):
    dist = urban_blockers(density)
    link = ue_link(d)
    est = estimate_p_all_blocked(LinkSet((link,)), dist, SampleRegion.for_cell(300.0, dist),
                                 100_000, 2021, workers=4)
    assert est.deviation(p_blocked(link, dist)) <= 3.0


def test_two_link_correlation_ordering():
    dist = urban_blockers()
    rng = np.random.default_rng(2021)
    for _ in range(100):
        phi = rng.uniform(0.0, 2.0 * math.pi)
        links = tuple(ue_link(rng.uniform(60.0, 300.0), phi + offset)
                      for offset in (0.0, rng.uniform(-math.pi / 6.0, math.pi / 6.0)))
        report = compare_correlation(LinkSet(links), dist, QUAD)
        assert report.correlated >= report.independent - 1e-9


def test_two_link_matches_simulation():
    dist = urban_blockers()
    ls = LinkSet((ue_link(250.0), ue_link(220.0, 0.15)))
    report = compare_correlation(ls, dist, QUAD)
    est = estimate_p_all_blocked(ls, dist, SampleRegion.for_cell(300.0, dist), 100_000, 7,
                                 workers=4)
    assert est.deviation(report.correlated) <= 3.0
    assert est.deviation(report.independent) > 3.0


@pytest.mark.parametrize("phi_deg", [0.0, 15.0, 30.0])
@pytest.mark.parametrize("d", [100.0, 170.0, 200.0, 250.0])
def test_sector_study_matches_simulation(phi_deg, d):
    s = sector_study_scenario()
    u = UserPosition(d, math.radians(phi_deg))
    est = estimate_failure_at(u, s, 10_000, 2021, workers=4)
    assert est.deviation(failure_prob_at(u, s, QUAD)) <= 3.0


def test_sector_study_jump_behind_relay():
    # past the relay on its azimuth, the relay-to-user hop runs under the direct link
    s = sector_study_scenario()
    aligned = [failure_prob_at(UserPosition(d, 0.0), s, QUAD) for d in (170.0, 200.0)]
    off_axis = [failure_prob_at(UserPosition(d, math.radians(15.0)), s, QUAD) for d in (170.0, 200.0)]
    rise, off_rise = aligned[1] - aligned[0], off_axis[1] - off_axis[0]
    assert off_rise > 0.0
    # about 4.7 at this quadrature
    assert rise > 4.5 * off_rise


def test_relay_optimization():
    template = CellScenario(shapes=urban_blockers(), budgets=LinkBudgets.reference())
    r_grid = [float(r) for r in range(30, 300, 30)]
    blocking = optimize_relays(replace(template, budgets=None), r_grid, [20.0], QUAD, 6, 4)
    with_budget = optimize_relays(template, r_grid, [20.0], QUAD, 6, 4)
    assert blocking.relay_radius > 150.0
    assert with_budget.failure >= blocking.failure - 1e-12
