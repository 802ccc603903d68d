"""
src/core/shapes.py - Blocker statistics and single-link blockage

The four blocker models (segments, rectangles, each with or without height)
are one model here: a segment is a rectangle of width 0, and "no height"
is an infinite height.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .exceptions import InvalidArgumentError, UnsupportedDistributionError
from .geom2d import (EMPTY, ConvexPolygon, Point2, PolygonBatch, minkowski_segment_rect,
                     minkowski_segment_rect_batch)

UNIFORM = "uniform"
DETERMINISTIC = "deterministic"

ORIENTATION_TOL = 1e-12


@dataclass(frozen=True)
class ScalarDist:
    """Uniform on [0, max] or a point mass at value"""
    kind: str
    max: float = 0.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (UNIFORM, DETERMINISTIC):
            raise InvalidArgumentError(f"unknown distribution kind '{self.kind}'")
        if self.kind == UNIFORM and not self.max >= 0:
            raise InvalidArgumentError(f"uniform max must be >= 0, got {self.max}")
        if self.kind == DETERMINISTIC and not self.value >= 0:
            raise InvalidArgumentError(f"deterministic value must be >= 0, got {self.value}")

    @classmethod
    def uniform(cls, max_value: float) -> "ScalarDist":
        return cls(UNIFORM, max=float(max_value))

    @classmethod
    def deterministic(cls, value: float) -> "ScalarDist":
        return cls(DETERMINISTIC, value=float(value))

    @property
    def is_point_mass(self) -> bool:
        """Deterministic, or uniform on a zero-width support"""
        return self.kind == DETERMINISTIC or self.max == 0.0

    @property
    def support(self) -> Tuple[float, float]:
        if self.kind == DETERMINISTIC:
            return self.value, self.value
        return 0.0, self.max

    @property
    def upper(self) -> float:
        return self.support[1]

    def mean(self) -> float:
        return self.value if self.kind == DETERMINISTIC else 0.5 * self.max

    def cdf(self, x: float) -> float:
        """P(X <= x)"""
        if self.is_point_mass:
            return 1.0 if x >= self.upper else 0.0
        return min(max(x / self.max, 0.0), 1.0)

    def survival(self, x: float) -> float:
        """P(X >= x); differs from 1 - cdf only at a point mass"""
        if self.is_point_mass:
            return 1.0 if self.upper >= x else 0.0
        return 1.0 - self.cdf(x)

    def integrated_cdf(self, a: float, b: float) -> float:
        """Integral of the cdf over [a, b], a <= b"""
        if self.is_point_mass:
            return max(0.0, b - max(a, self.upper))
        m = self.max

        def antiderivative(x: float) -> float:
            if x <= 0.0:
                return 0.0
            if x <= m:
                return x * x / (2.0 * m)
            return m / 2.0 + (x - m)

        return antiderivative(b) - antiderivative(a)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == DETERMINISTIC:
            return np.full(size, self.value)
        return rng.uniform(0.0, self.max, size)


@dataclass(frozen=True)
class ShapeDistribution:
    """Blocker law: L, W, optional H, orientation and density (per m^2)"""
    length: ScalarDist
    width: ScalarDist
    height: Optional[ScalarDist]
    orientation: ScalarDist
    density: float

    def __post_init__(self):
        if not self.density >= 0:
            raise InvalidArgumentError(f"density must be >= 0, got {self.density}")
        o = self.orientation
        if o.kind == UNIFORM and abs(o.max - math.pi) > ORIENTATION_TOL:
            raise InvalidArgumentError("uniform orientation must be supported on [0, pi]")
        if o.kind == DETERMINISTIC and o.value > math.pi:
            raise InvalidArgumentError(f"orientation must lie in [0, pi], got {o.value}")

    @property
    def uniform_orientation(self) -> bool:
        return self.orientation.kind == UNIFORM

    @property
    def max_footprint_half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.length.upper, self.width.upper)


@dataclass(frozen=True)
class Link:
    """3D link: two ground points with antenna heights"""
    a: Point2
    b: Point2
    height_a: float = 0.0
    height_b: float = 0.0

    def __post_init__(self):
        if not (self.height_a >= 0 and self.height_b >= 0):
            raise InvalidArgumentError("link heights must be >= 0")

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    @property
    def length_3d(self) -> float:
        return math.hypot(self.length, self.height_b - self.height_a)

    @property
    def azimuth(self) -> float:
        return math.atan2(self.b.y - self.a.y, self.b.x - self.a.x)

    @property
    def high(self) -> float:
        return max(self.height_a, self.height_b)

    @property
    def low(self) -> float:
        return min(self.height_a, self.height_b)

    def low_to_high(self) -> Tuple[Point2, Point2]:
        """Endpoints ordered from the lower antenna to the higher one"""
        if self.height_a <= self.height_b:
            return self.a, self.b
        return self.b, self.a


def beta(dist: ShapeDistribution) -> float:
    """Per-meter sweep rate 2 lambda (E[L] + E[W]) / pi"""
    if not dist.uniform_orientation:
        raise UnsupportedDistributionError(
            "closed-form beta requires orientation uniform on [0, pi]")
    return 2.0 * dist.density * (dist.length.mean() + dist.width.mean()) / math.pi


def p_footprint(dist: ShapeDistribution) -> float:
    """Footprint term lambda E[L] E[W]"""
    return dist.density * dist.length.mean() * dist.width.mean()


def eta(h0: float, h1: float, height: Optional[ScalarDist]) -> float:
    """Sweep attenuation 1 - (1/(h0-h1)) int_{h1}^{h0} F_H"""
    if h1 > h0:
        raise InvalidArgumentError(f"eta needs h0 >= h1, got h0={h0}, h1={h1}")
    if height is None:
        return 1.0
    if h0 - h1 <= 0.0:
        return height.survival(h0)
    value = 1.0 - height.integrated_cdf(h1, h0) / (h0 - h1)
    return min(max(value, 0.0), 1.0)


def mu(h1: float, height: Optional[ScalarDist]) -> float:
    """Footprint attenuation 1 - F_H(h1)"""
    if h1 < 0:
        raise InvalidArgumentError(f"mu needs h1 >= 0, got {h1}")
    if height is None:
        return 1.0
    return height.survival(h1)


def eta_uniform_closed_form(h0: float, h1: float, h_max: float) -> float:
    """Three-branch eta for H ~ U[0, h_max], h0 > h1"""
    if h_max <= h1:
        return 0.0
    if h0 <= h_max:
        return 1.0 - (h0 + h1) / (2.0 * h_max)
    return 1.0 - ((h_max ** 2 - h1 ** 2) / (2.0 * h_max) + h0 - h_max) / (h0 - h1)


def mu_uniform_closed_form(h1: float, h_max: float) -> float:
    """Two-branch mu for H ~ U[0, h_max]"""
    if h_max <= h1:
        return 0.0
    return (h_max - h1) / h_max


def expected_blockers(link: Link, dist: ShapeDistribution) -> float:
    """E[K] = eta beta d + mu p"""
    sweep = eta(link.high, link.low, dist.height) * beta(dist) * link.length
    return sweep + mu(link.low, dist.height) * p_footprint(dist)


def p_blocked(link: Link, dist: ShapeDistribution) -> float:
    """1 - exp(-E[K])"""
    return float(-np.expm1(-expected_blockers(link, dist)))


def blocking_region(link: Link, l: float, w: float, h: float,
                    theta: float) -> ConvexPolygon:
    """Centers of an (l, w, h, theta) blocker that cut the link's sightline

    Only the stretch of the link lying no higher than h can be hit, which
    is the sub-segment from the low endpoint of length
    (h - low)/(high - low) * d.
    """
    lo, hi = link.low, link.high
    if h < lo:
        return EMPTY
    start, end = link.low_to_high()
    if h >= hi or hi - lo <= 0.0:
        return minkowski_segment_rect(start, end, l, w, theta)
    f = (h - lo) / (hi - lo)
    cut = Point2(start.x + f * (end.x - start.x), start.y + f * (end.y - start.y))
    return minkowski_segment_rect(start, cut, l, w, theta)


def blocking_regions(link: Link, l: np.ndarray, w: np.ndarray, h: np.ndarray,
                     theta: float) -> PolygonBatch:
    """blocking_region for every (l[k], w[k], h[k]) at one orientation"""
    l, w, h = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (l, w, h)))
    lo, hi = link.low, link.high
    rows = np.flatnonzero(h >= lo)
    start, end = link.low_to_high()
    if hi - lo > 0.0:
        f = np.minimum((h[rows] - lo) / (hi - lo), 1.0)
    else:
        f = np.ones(len(rows))
    xs, ys = minkowski_segment_rect_batch(start.x, start.y,
                                          start.x + f * (end.x - start.x),
                                          start.y + f * (end.y - start.y),
                                          l[rows], w[rows], theta)
    return PolygonBatch(rows, xs, ys, len(h))


def blocking_area_closed_form(link: Link, l: float, w: float, h: float,
                              theta: float) -> float:
    """Piecewise area of the blocking region with delta = theta - link azimuth"""
    lo, hi = link.low, link.high
    if h < lo:
        return 0.0
    d = link.length
    if hi - lo > 0.0 and h < hi:
        d *= (h - lo) / (hi - lo)
    delta = theta - link.azimuth
    return d * (l * abs(math.sin(delta)) + w * abs(math.cos(delta))) + w * l


def deterministic_building_expected_blockers(link: Link, l0: float, w0: float,
                                             h_b: float, density: float) -> float:
    """E[K] for identical buildings aligned with the link, low < h_b < high"""
    lo, hi = link.low, link.high
    if not lo < h_b < hi:
        raise InvalidArgumentError("building height must lie strictly between the endpoint heights")
    return density * w0 * ((h_b - lo) / (hi - lo) * link.length + l0)
