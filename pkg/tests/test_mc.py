"""
Monte Carlo oracle test suite
"""
import math

import numpy as np
import pytest

from src.core.exceptions import DiagnosticsError, InvalidArgumentError
from src.core.geom2d import Point2, contains
from src.core.mc import (Blocker, Estimate, SampleRegion, blocks, estimate_p_all_blocked,
                         sample_scene, sample_scene_arrays)
from src.core.multilink import LinkSet, QuadratureSpec, p_all_blocked
from src.core.shapes import Link, ScalarDist, ShapeDistribution, blocking_region, p_blocked
from src.utils.rng import TrialStreams

BS = Point2(0.0, 0.0)


def urban(density=1e-4):
    return ShapeDistribution(ScalarDist.uniform(30.0), ScalarDist.uniform(30.0),
                             ScalarDist.uniform(30.0), ScalarDist.uniform(math.pi), density)


def ue_link(d, phi=0.0):
    return Link(BS, Point2(d * math.cos(phi), d * math.sin(phi)), 40.0, 1.5)


@pytest.fixture
def cell_region():
    return SampleRegion.for_cell(300.0, urban())


class TestSampling:

    def test_zero_density_is_empty(self):
        rng = TrialStreams(1).stream(0)
        assert sample_scene(SampleRegion(BS, 300.0), urban(0.0), rng) == []

    def test_poisson_mean(self):
        region = SampleRegion(BS, 300.0)
        streams = TrialStreams(7)
        counts = [len(sample_scene_arrays(region, urban(), streams.stream(t)))
                  for t in range(2000)]
        expected = 1e-4 * math.pi * 300.0 ** 2
        assert np.mean(counts) == pytest.approx(expected, abs=4.0 * math.sqrt(expected / 2000))

    def test_centers_inside_region(self):
        region = SampleRegion(Point2(50.0, -20.0), 100.0)
        scene = sample_scene_arrays(region, urban(1e-3), TrialStreams(3).stream(0))
        assert np.all(np.hypot(scene.cx - 50.0, scene.cy + 20.0) <= 100.0)

    def test_deterministic_shapes_shared(self):
        fixed = ShapeDistribution(ScalarDist.deterministic(15.0), ScalarDist.deterministic(10.0),
                                  ScalarDist.deterministic(20.0), ScalarDist.uniform(math.pi), 1e-3)
        scene = sample_scene(SampleRegion(BS, 200.0), fixed, TrialStreams(5).stream(0))
        assert scene
        assert {(b.length, b.width, b.height) for b in scene} == {(15.0, 10.0, 20.0)}

    def test_margin_rule(self):
        assert SampleRegion.for_cell(300.0, urban()).radius == pytest.approx(
            300.0 + 15.0 * math.sqrt(2.0))
        with pytest.raises(InvalidArgumentError):
            SampleRegion(BS, 0.0)


class TestBlocks:
    """3D sightline test"""

    def test_far_blocker(self):
        b = Blocker(Point2(50.0, 80.0), 10.0, 10.0, math.inf, 0.0)
        assert not blocks(b, ue_link(100.0))

    def test_infinite_height_on_midpoint(self):
        b = Blocker(Point2(50.0, 0.0), 4.0, 4.0, math.inf, 0.7)
        assert blocks(b, ue_link(100.0))

    def test_height_against_sloped_link(self):
        link = ue_link(100.0)
        assert blocks(Blocker(Point2(50.0, 0.0), 10.0, 10.0, 25.0, 0.0), link)
        assert not blocks(Blocker(Point2(50.0, 0.0), 10.0, 10.0, 18.0, 0.0), link)

    def test_zero_length_link_under_footprint(self):
        link = Link(BS, BS, 40.0, 1.5)
        assert blocks(Blocker(Point2(2.0, 0.0), 10.0, 10.0, 5.0, 0.0), link)
        assert not blocks(Blocker(Point2(2.0, 0.0), 10.0, 10.0, 1.0, 0.0), link)

    def test_agrees_with_blocking_region(self):
        rng = np.random.default_rng(53)
        for _ in range(10_000):
            a, b = Point2(*rng.uniform(-50.0, 50.0, 2)), Point2(*rng.uniform(-50.0, 50.0, 2))
            link = Link(a, b, rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0))
            l, w = rng.uniform(0.0, 20.0, 2)
            h, theta = rng.uniform(0.0, 45.0), rng.uniform(0.0, math.pi)
            center = Point2(*rng.uniform(-70.0, 70.0, 2))
            inside = contains(blocking_region(link, l, w, h, theta), center)
            assert blocks(Blocker(center, l, w, h, theta), link) == inside


class TestEstimate:

    def test_from_counts(self):
        est = Estimate.from_counts(25, 100)
        assert est.p_hat == 0.25
        assert est.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 100))

    def test_wilson_interval_brackets_estimate(self):
        lo, hi = Estimate.from_counts(3, 50).wilson_interval(0.95)
        assert 0.0 <= lo < 0.06 < hi <= 1.0

    def test_deviation_floor_for_zero_hits(self):
        assert Estimate.from_counts(0, 100).deviation(0.01) == pytest.approx(
            0.01 / math.sqrt(0.01 * 0.99 / 100))
        assert Estimate.from_counts(0, 100).deviation(0.0) == 0.0

    def test_deviation_uses_own_stderr(self):
        # the reference's binomial error would be 0.0433 here
        assert Estimate(0.2, 0.01, 100).deviation(0.25) == pytest.approx(5.0)
        assert Estimate.from_counts(100, 100).deviation(0.9) == pytest.approx(
            0.1 / math.sqrt(0.09 / 100))


class TestEstimatePAllBlocked:
    """Scene-based estimates against the analytic model"""

    def test_zero_density(self, cell_region):
        est = estimate_p_all_blocked(LinkSet((ue_link(200.0),)), urban(0.0), cell_region, 500, 1)
        assert est.p_hat == 0.0

    def test_zero_trials_rejected(self, cell_region):
        with pytest.raises(InvalidArgumentError):
            estimate_p_all_blocked(LinkSet((ue_link(200.0),)), urban(), cell_region, 0, 1)

    def test_reproducible_across_runs_and_workers(self, cell_region):
        ls = LinkSet((ue_link(250.0), ue_link(200.0, 0.3)))
        a = estimate_p_all_blocked(ls, urban(), cell_region, 800, 99)
        b = estimate_p_all_blocked(ls, urban(), cell_region, 800, 99)
        c = estimate_p_all_blocked(ls, urban(), cell_region, 800, 99, workers=2)
        assert a == b == c

    def test_duplicate_link_same_event(self, cell_region):
        link = ue_link(300.0)
        single = estimate_p_all_blocked(LinkSet((link,)), urban(), cell_region, 1000, 4)
        double = estimate_p_all_blocked(LinkSet((link, link)), urban(), cell_region, 1000, 4)
        assert single.p_hat == double.p_hat

    def test_single_link_agrees_with_closed_form(self, cell_region):
        link = ue_link(300.0)
        est = estimate_p_all_blocked(LinkSet((link,)), urban(), cell_region, 5000, 2021)
        assert est.deviation(p_blocked(link, urban())) <= 4.0

    def test_default_region_from_links(self):
        link = Link(Point2(1000.0, 1000.0), Point2(1100.0, 1000.0), 40.0, 1.5)
        est = estimate_p_all_blocked(LinkSet((link,)), urban(), None, 3000, 8)
        assert est.deviation(p_blocked(link, urban())) <= 4.0

    def test_conditioning_on_clear_link(self, cell_region):
        ls = LinkSet((ue_link(250.0), ue_link(240.0, 0.1)), clear={1})
        analytic = p_all_blocked(ls, urban(), QuadratureSpec(nodes_l=6, nodes_w=6, nodes_h=3,
                                                              nodes_theta=8))
        est = estimate_p_all_blocked(ls, urban(), cell_region, 3000, 12)
        assert est.deviation(analytic) <= 4.0

    def test_low_but_acceptable_conditioning_rate(self):
        # clear link keeps about 0.37% of scenes, above the 0.1% floor
        segments = ShapeDistribution(ScalarDist.deterministic(20.0), ScalarDist.deterministic(0.0),
                                     None, ScalarDist.uniform(math.pi), 1e-2)
        clear = Link(Point2(-22.0, 0.0), Point2(22.0, 0.0))
        target = Link(Point2(-22.0, 15.0), Point2(22.0, 15.0))
        ls = LinkSet((target, clear), clear={1})
        est = estimate_p_all_blocked(ls, segments, None, 150, 21)
        assert est.trials == 150
        analytic = p_all_blocked(ls, segments, QuadratureSpec(nodes_theta=32))
        assert est.deviation(analytic) <= 4.0

    def test_hopeless_conditioning_raises(self):
        dense = ShapeDistribution(ScalarDist.uniform(30.0), ScalarDist.uniform(30.0), None,
                                  ScalarDist.uniform(math.pi), 0.05)
        clear = Link(Point2(-50.0, 0.0), Point2(50.0, 0.0))
        target = Link(Point2(0.0, -50.0), Point2(0.0, 50.0))
        with pytest.raises(DiagnosticsError):
            estimate_p_all_blocked(LinkSet((target, clear), clear={1}), dense, None, 1, 3)


class TestTrialStreams:

    def test_same_key_same_draws(self):
        a = TrialStreams(42).stream(3, 1).uniform(size=4)
        b = TrialStreams(42).stream(3, 1).uniform(size=4)
        assert np.array_equal(a, b)

    def test_keys_are_independent(self):
        s = TrialStreams(42)
        assert not np.array_equal(s.stream(3).uniform(size=4), s.stream(4).uniform(size=4))
        assert not np.array_equal(s.stream(3, 0).uniform(size=4), s.stream(3, 1).uniform(size=4))

    def test_seed_is_kept(self):
        assert TrialStreams(7).seed == 7
        assert TrialStreams().seed >= 0
