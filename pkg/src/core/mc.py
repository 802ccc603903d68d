"""
src/core/mc.py - Monte Carlo oracle for blockage probabilities

Scenes are Poisson boolean models of 3D rectangular blockers thrown in a
disc. Every trial has its own random stream, so estimates depend only on
(seed, trials, parameters).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from ..utils.parallel import ordered_map
from ..utils.rng import TrialStreams
from .exceptions import DiagnosticsError, InvalidArgumentError
from .geom2d import Point2
from .multilink import LinkSet
from .shapes import Link, ShapeDistribution

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 1e-3
SLAB_EPS = 1e-12


@dataclass(frozen=True)
class Blocker:
    """One building: footprint center, size, height and orientation"""
    center: Point2
    length: float
    width: float
    height: float
    orientation: float


@dataclass(frozen=True)
class SampleRegion:
    """Disc in which blocker centers are thrown"""
    center: Point2
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgumentError(f"sample radius must be > 0, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @classmethod
    def for_cell(cls, cell_radius: float, dist: ShapeDistribution) -> "SampleRegion":
        """Cell disc widened by the largest footprint half-diagonal"""
        return cls(Point2(0.0, 0.0), cell_radius + dist.max_footprint_half_diagonal)

    @classmethod
    def for_links(cls, links: Sequence[Link], dist: ShapeDistribution) -> "SampleRegion":
        """Smallest disc around the bounding-box center holding all endpoints, plus margin"""
        pts = np.array([(p.x, p.y) for link in links for p in (link.a, link.b)], dtype=float)
        cx, cy = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        reach = float(np.max(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)))
        return cls(Point2(float(cx), float(cy)),
                   max(reach + dist.max_footprint_half_diagonal, 1e-6))


@dataclass(frozen=True)
class Estimate:
    """Empirical probability with its normal-approximation standard error"""
    p_hat: float
    stderr: float
    trials: int

    @classmethod
    def from_counts(cls, hits: int, trials: int) -> "Estimate":
        p = hits / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials)

    def wilson_interval(self, confidence: float = 0.95) -> Tuple[float, float]:
        z = float(norm.ppf(0.5 + 0.5 * confidence))
        n, p = self.trials, self.p_hat
        denom = 1.0 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
        return max(0.0, centre - half), min(1.0, centre + half)

    def deviation(self, reference: float) -> float:
        """|p_hat - reference| in standard errors

        An estimate with zero standard error (no hits, or all hits) is
        scored against the binomial error of the reference instead.
        """
        diff = abs(self.p_hat - reference)
        sigma = self.stderr
        if sigma == 0.0:
            ref = min(max(reference, 0.0), 1.0)
            sigma = math.sqrt(ref * (1.0 - ref) / self.trials)
        if sigma > 0.0:
            return diff / sigma
        return 0.0 if diff <= 1e-12 else math.inf


@dataclass
class SceneArrays:
    """Column view of a scene for vectorized blockage tests"""
    cx: np.ndarray
    cy: np.ndarray
    length: np.ndarray
    width: np.ndarray
    height: np.ndarray
    orientation: np.ndarray

    def __len__(self) -> int:
        return len(self.cx)

    def blockers(self) -> List[Blocker]:
        return [Blocker(Point2(float(x), float(y)), float(l), float(w), float(h), float(t))
                for x, y, l, w, h, t in zip(self.cx, self.cy, self.length, self.width,
                                            self.height, self.orientation)]


def sample_scene_arrays(region: SampleRegion, dist: ShapeDistribution,
                        rng: np.random.Generator) -> SceneArrays:
    count = int(rng.poisson(dist.density * region.area)) if dist.density > 0 else 0
    radius = region.radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    angle = rng.uniform(0.0, 2.0 * math.pi, count)
    length = dist.length.sample(rng, count)
    width = dist.width.sample(rng, count)
    height = dist.height.sample(rng, count) if dist.height is not None else np.full(count, math.inf)
    orientation = dist.orientation.sample(rng, count)
    return SceneArrays(region.center.x + radius * np.cos(angle),
                       region.center.y + radius * np.sin(angle),
                       length, width, height, orientation)


def sample_scene(region: SampleRegion, dist: ShapeDistribution,
                 rng: np.random.Generator) -> List[Blocker]:
    """Poisson number of blockers, centers uniform on the disc, shapes i.i.d."""
    return sample_scene_arrays(region, dist, rng).blockers()


def _slab(origin: np.ndarray, step: np.ndarray, half: np.ndarray,
          t0: np.ndarray, t1: np.ndarray) -> None:
    """Narrow [t0, t1] to where |origin + t*step| <= half, in place"""
    moving = np.abs(step) > SLAB_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (-half - origin) / step
        tb = (half - origin) / step
    lo = np.where(moving, np.minimum(ta, tb), -np.inf)
    hi = np.where(moving, np.maximum(ta, tb), np.inf)
    outside = ~moving & (np.abs(origin) > half + SLAB_EPS)
    lo[outside] = np.inf
    np.maximum(t0, lo, out=t0)
    np.minimum(t1, hi, out=t1)


def blocked_mask(scene: SceneArrays, link: Link) -> np.ndarray:
    """Per blocker: does it cut the link's 3D sightline"""
    n = len(scene)
    if n == 0:
        return np.zeros(0, dtype=bool)
    c, s = np.cos(scene.orientation), np.sin(scene.orientation)
    ax, ay = link.a.x - scene.cx, link.a.y - scene.cy
    dx, dy = link.b.x - link.a.x, link.b.y - link.a.y

    t0, t1 = np.zeros(n), np.ones(n)
    _slab(ax * c + ay * s, dx * c + dy * s, 0.5 * scene.length, t0, t1)
    _slab(-ax * s + ay * c, -dx * s + dy * c, 0.5 * scene.width, t0, t1)
    hit = t0 <= t1 + SLAB_EPS

    # link height is monotone in t, so its minimum over [t0, t1] is at an end
    dh = link.height_b - link.height_a
    lowest = link.height_a + np.where(dh >= 0.0, t0, t1) * dh
    return hit & (lowest <= scene.height)


def blocks(b: Blocker, link: Link) -> bool:
    """Scalar form of blocked_mask for one blocker"""
    scene = SceneArrays(np.array([b.center.x]), np.array([b.center.y]), np.array([b.length]),
                        np.array([b.width]), np.array([b.height]), np.array([b.orientation]))
    return bool(blocked_mask(scene, link)[0])


def _any_blocked(scene: SceneArrays, links: Sequence[Link]) -> List[bool]:
    return [bool(blocked_mask(scene, link).any()) for link in links]


def _scene_outcome(ls: LinkSet, blocked: List[bool]) -> bool:
    """Every path has at least one blocked link"""
    return all(any(blocked[i] for i in path) for path in ls.paths)


def _attempt_budget(trials: int) -> int:
    """Scenes a run of this many trials may draw before acceptance is declared too low

    Sized so that a rate at MIN_ACCEPTANCE almost never runs out by chance.
    """
    return math.ceil((trials + 4.0 * math.sqrt(trials) + 4.0) / MIN_ACCEPTANCE)


def _trial_chunk(task) -> Tuple[int, int]:
    """(hits, attempts) for trials [start, stop)"""
    ls, dist, region, seed, start, stop = task
    streams = TrialStreams(seed)
    budget = _attempt_budget(stop - start)
    hits = attempts = 0
    for trial in range(start, stop):
        attempt = 0
        while True:
            if attempts >= budget:
                raise DiagnosticsError(
                    f"conditioning acceptance rate {(trial - start) / attempts:.2e} below "
                    f"{MIN_ACCEPTANCE} after {attempts} scenes")
            scene = sample_scene_arrays(region, dist, streams.stream(trial, attempt))
            attempts += 1
            attempt += 1
            blocked = _any_blocked(scene, ls.links)
            if not any(blocked[i] for i in ls.clear):
                break
        hits += _scene_outcome(ls, blocked)
    return hits, attempts


def estimate_p_all_blocked(ls: LinkSet, dist: ShapeDistribution,
                           region: Optional[SampleRegion], trials: int, seed: int,
                           workers: int = 1) -> Estimate:
    """Fraction of scenes in which every path of ls is blocked

    Scenes that block a clear link are rejected and redrawn.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    if region is None:
        region = SampleRegion.for_links(ls.links, dist)
    if not ls.paths:
        return Estimate(1.0, 0.0, trials)

    chunk = max(1, math.ceil(trials / max(1, 8 * workers)))
    tasks = [(ls, dist, region, seed, start, min(trials, start + chunk))
             for start in range(0, trials, chunk)]
    results = ordered_map(_trial_chunk, tasks, workers=workers)
    hits = sum(h for h, _ in results)
    attempts = sum(a for _, a in results)

    acceptance = trials / attempts
    if acceptance < MIN_ACCEPTANCE:
        raise DiagnosticsError(f"conditioning acceptance rate {acceptance:.2e} below {MIN_ACCEPTANCE}")
    if acceptance < 1.0:
        logger.debug("Conditioning accepted %.1f%% of scenes", 100.0 * acceptance)
    return Estimate.from_counts(hits, trials)
