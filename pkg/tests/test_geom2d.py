"""
Geometry test suite: Minkowski sums, clipping and union areas
"""
import math

import numpy as np
import pytest

from src.core.exceptions import InvalidArgumentError
from src.core.geom2d import (EMPTY, BatchLattice, ConvexPolygon, IntersectionLattice, Point2,
                             PolygonBatch, contains, convex_hull, convex_intersect, grid_union_area,
                             intersect_batches, minkowski_segment_rect,
                             minkowski_segment_rect_batch, polygon_area, union_area)


def square(x0=0.0, y0=0.0, side=1.0):
    return ConvexPolygon((Point2(x0, y0), Point2(x0 + side, y0),
                          Point2(x0 + side, y0 + side), Point2(x0, y0 + side)))


def closed_form_area(p0, p1, l, w, theta):
    d = math.hypot(p1.x - p0.x, p1.y - p0.y)
    delta = theta - math.atan2(p1.y - p0.y, p1.x - p0.x)
    return d * (l * abs(math.sin(delta)) + w * abs(math.cos(delta))) + w * l


def random_hexagons(rng, count):
    polys = []
    for _ in range(count):
        p0 = Point2(*rng.uniform(-20.0, 20.0, 2))
        p1 = Point2(*rng.uniform(-20.0, 20.0, 2))
        polys.append(minkowski_segment_rect(p0, p1, rng.uniform(1.0, 10.0),
                                            rng.uniform(1.0, 10.0), rng.uniform(0.0, math.pi)))
    return polys


class TestMinkowskiSegmentRect:
    """Blocking-region construction"""

    def test_axis_aligned_hexagon(self):
        poly = minkowski_segment_rect(Point2(0, 0), Point2(10, 0), 2.0, 1.0, 0.0)
        assert polygon_area(poly) == pytest.approx(12.0, rel=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 2, 2.5])
    def test_degenerate_segment_is_rectangle(self, theta):
        poly = minkowski_segment_rect(Point2(3, 3), Point2(3, 3), 2.0, 1.0, theta)
        assert polygon_area(poly) == pytest.approx(2.0, rel=1e-12)

    def test_zero_width_parallelogram(self):
        poly = minkowski_segment_rect(Point2(0, 0), Point2(10, 0), 2.0, 0.0, math.pi / 2)
        assert polygon_area(poly) == pytest.approx(20.0, rel=1e-12)
        assert len(poly.vertices) == 4

    def test_negative_dimension_rejected(self):
        with pytest.raises(InvalidArgumentError):
            minkowski_segment_rect(Point2(0, 0), Point2(1, 0), -1.0, 1.0, 0.0)

    def test_matches_closed_form_on_random_cases(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            p0 = Point2(*rng.uniform(-300.0, 300.0, 2))
            p1 = Point2(*rng.uniform(-300.0, 300.0, 2))
            l, w = rng.uniform(0.0, 30.0, 2)
            theta = rng.uniform(0.0, math.pi)
            poly = minkowski_segment_rect(p0, p1, l, w, theta)
            assert polygon_area(poly) == pytest.approx(closed_form_area(p0, p1, l, w, theta),
                                                       rel=1e-9, abs=1e-9)

    def test_vertices_counterclockwise(self):
        poly = minkowski_segment_rect(Point2(0, 0), Point2(5, 5), 3.0, 2.0, 0.4)
        vs = poly.vertices
        signed = sum(a.x * b.y - b.x * a.y for a, b in zip(vs, vs[1:] + vs[:1]))
        assert signed > 0


class TestConvexIntersect:
    """Half-plane clipping"""

    def test_identity(self):
        assert polygon_area(convex_intersect(square(), square())) == pytest.approx(1.0)

    def test_disjoint_is_empty(self):
        result = convex_intersect(square(), square(5.0, 0.0))
        assert result.is_empty
        assert polygon_area(result) == 0.0

    def test_half_overlap(self):
        assert polygon_area(convex_intersect(square(), square(0.5, 0.0))) == pytest.approx(0.5)

    def test_empty_input(self):
        assert convex_intersect(EMPTY, square()).is_empty

    def test_bounded_and_commutative(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a, b = random_hexagons(rng, 2)
            ab = polygon_area(convex_intersect(a, b))
            ba = polygon_area(convex_intersect(b, a))
            assert ab <= min(polygon_area(a), polygon_area(b)) + 1e-9
            assert ab == pytest.approx(ba, rel=1e-9, abs=1e-7)


class TestPolygonArea:

    def test_empty(self):
        assert polygon_area(EMPTY) == 0.0

    def test_unit_square(self):
        assert polygon_area(square()) == 1.0

    def test_triangle(self):
        tri = ConvexPolygon((Point2(0, 0), Point2(2, 0), Point2(0, 2)))
        assert polygon_area(tri) == pytest.approx(2.0)

    def test_collinear_hull_is_degenerate(self):
        hull = convex_hull([Point2(0, 0), Point2(1, 1), Point2(2, 2)])
        assert hull.is_empty
        assert polygon_area(hull) == 0.0


class TestContains:

    def test_inside_outside_and_boundary(self):
        sq = square()
        assert contains(sq, Point2(0.5, 0.5))
        assert contains(sq, Point2(1.0, 0.5))
        assert not contains(sq, Point2(1.1, 0.5))

    def test_degenerate_contains_nothing(self):
        assert not contains(EMPTY, Point2(0, 0))


class TestUnionArea:
    """Inclusion-exclusion union areas"""

    def test_identical_squares(self):
        assert union_area([square(), square()]) == pytest.approx(1.0)

    def test_disjoint_squares(self):
        assert union_area([square(), square(5.0, 0.0)]) == pytest.approx(2.0)

    def test_shifted_squares(self):
        assert union_area([square(), square(0.5, 0.0)]) == pytest.approx(1.5)

    def test_single_and_empty(self):
        hexagon = minkowski_segment_rect(Point2(0, 0), Point2(4, 1), 2.0, 1.0, 0.7)
        assert union_area([hexagon]) == polygon_area(hexagon)
        assert union_area([]) == 0.0
        assert union_area([EMPTY, hexagon]) == pytest.approx(polygon_area(hexagon))

    def test_subadditive_and_monotone(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            polys = random_hexagons(rng, 5)
            total = union_area(polys)
            assert total <= sum(polygon_area(p) for p in polys) + 1e-9
            assert union_area(polys[:4]) <= total + 1e-9

    def test_invariant_under_rigid_motion(self):
        rng = np.random.default_rng(23)
        polys = random_hexagons(rng, 4)
        moved = [p.rotated(1.1).translated(250.0, -80.0) for p in polys]
        assert union_area(moved) == pytest.approx(union_area(polys), rel=1e-9)

    def test_matches_shapely(self):
        shapely_geometry = pytest.importorskip("shapely.geometry")
        shapely_ops = pytest.importorskip("shapely.ops")
        rng = np.random.default_rng(29)
        for _ in range(200):
            polys = random_hexagons(rng, int(rng.integers(2, 7)))
            oracle = shapely_ops.unary_union([shapely_geometry.Polygon(p.vertices) for p in polys])
            assert union_area(polys) == pytest.approx(oracle.area, rel=1e-6)

    def test_matches_rasterization(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            polys = random_hexagons(rng, 3)
            raster = grid_union_area(polys, cell_size=0.02)
            assert union_area(polys) == pytest.approx(raster, rel=5e-3)

    def test_grid_fallback_beyond_exact_limit(self, caplog):
        squares = [square(0.3 * k, 0.1 * k, 2.0) for k in range(5)]
        exact = union_area(squares)
        with caplog.at_level("WARNING"):
            approx = union_area(squares, max_exact=3)
        assert approx == pytest.approx(exact, rel=1e-2)
        assert "grid estimate" in caplog.text


class TestIntersectionLattice:

    def test_submask_unions_match_direct(self):
        rng = np.random.default_rng(37)
        polys = random_hexagons(rng, 4)
        lattice = IntersectionLattice(polys)
        for mask in range(1, 16):
            subset = [polys[i] for i in range(4) if mask >> i & 1]
            assert lattice.union_area(mask) == pytest.approx(union_area(subset), rel=1e-12)

    def test_pairwise_intersection_area(self):
        lattice = IntersectionLattice([square(), square(0.5, 0.0)])
        assert lattice.intersection_area(0b11) == pytest.approx(0.5)


def hexagon_batch(polys):
    """PolygonBatch holding the given hexagons, one per row"""
    xs = np.array([[v.x for v in p.vertices] for p in polys])
    ys = np.array([[v.y for v in p.vertices] for p in polys])
    return PolygonBatch(np.arange(len(polys)), xs, ys, len(polys))


class TestPolygonBatch:
    """Row-wise geometry on node grids"""

    def test_batch_minkowski_matches_scalar(self):
        rng = np.random.default_rng(41)
        x0, y0, x1, y1 = rng.uniform(-300.0, 300.0, (4, 500))
        l, w = rng.uniform(0.0, 30.0, (2, 500))
        xs, ys = minkowski_segment_rect_batch(x0, y0, x1, y1, l, w, 1.2)
        batch = PolygonBatch(np.arange(500), xs, ys, 500)
        expected = [polygon_area(minkowski_segment_rect(Point2(a, b), Point2(c, d), p, q, 1.2))
                    for a, b, c, d, p, q in zip(x0, y0, x1, y1, l, w)]
        np.testing.assert_allclose(batch.areas(), expected, rtol=1e-9, atol=1e-9)

    def test_batch_vertices_counterclockwise(self):
        xs, ys = minkowski_segment_rect_batch(0.0, 0.0, 5.0, 5.0, 3.0, 2.0, 0.4)
        signed = np.sum(xs * np.roll(ys, -1, axis=1) - np.roll(xs, -1, axis=1) * ys)
        assert signed > 0
        assert xs.mean() == pytest.approx(2.5) and ys.mean() == pytest.approx(2.5)

    def test_degenerate_inputs(self):
        xs, ys = minkowski_segment_rect_batch(3.0, 3.0, 3.0, 3.0, [2.0, 2.0], [1.0, 0.0], 0.3)
        areas = PolygonBatch(np.arange(2), xs, ys, 2).areas()
        assert areas[0] == pytest.approx(2.0) and areas[1] == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(InvalidArgumentError):
            minkowski_segment_rect_batch(0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 0.0)

    def test_intersection_matches_scalar(self):
        rng = np.random.default_rng(43)
        first, second = random_hexagons(rng, 300), random_hexagons(rng, 300)
        result = intersect_batches(hexagon_batch(first), hexagon_batch(second))
        expected = [polygon_area(convex_intersect(a, b)) for a, b in zip(first, second)]
        np.testing.assert_allclose(result.areas(), expected, rtol=1e-9, atol=1e-9)

    def test_disjoint_rows_dropped(self):
        a = hexagon_batch([square(), square()])
        b = hexagon_batch([square(5.0, 0.0), square(0.5, 0.0)])
        result = intersect_batches(a, b)
        assert result.index.tolist() == [1]
        assert result.areas().tolist() == pytest.approx([0.0, 0.5])
        assert result.polygon(0).is_empty

    def test_missing_rows_are_empty(self):
        a = PolygonBatch(np.array([2]), np.array([[0.0, 1.0, 1.0, 0.0]]),
                         np.array([[0.0, 0.0, 1.0, 1.0]]), 4)
        assert a.areas().tolist() == [0.0, 0.0, 1.0, 0.0]
        assert intersect_batches(a, PolygonBatch.empty(4)).areas().tolist() == [0.0] * 4
        assert polygon_area(a.polygon(2)) == pytest.approx(1.0)

    def test_lattice_matches_scalar_unions(self):
        rng = np.random.default_rng(47)
        groups = [random_hexagons(rng, 4) for _ in range(40)]
        lattice = BatchLattice([hexagon_batch([g[i] for g in groups]) for i in range(4)])
        for mask in (0b0011, 0b0110, 0b1011, 0b1111):
            expected = [union_area([g[i] for i in range(4) if mask >> i & 1]) for g in groups]
            np.testing.assert_allclose(lattice.union_area(mask), expected, rtol=1e-9, atol=1e-7)
