"""
src/core/multilink.py - Joint blockage of several correlated links

E[K_A] for a set of links A is lambda times the expected area of the union
of their blocking regions, integrated over (l, w, h, theta) on a tensor
Gauss-Legendre grid. Each orientation node handles its whole (l, w, h)
grid as one polygon batch. Joint probabilities follow by inclusion-exclusion.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.parallel import ordered_map
from ..utils.quadrature import gauss_legendre, piecewise_gauss_legendre, proportional_gauss_legendre
from .exceptions import InvalidArgumentError, UnsupportedSizeError
from .geom2d import DEFAULT_MAX_EXACT, BatchLattice, PolygonBatch, union_area
from .shapes import Link, ScalarDist, ShapeDistribution, blocking_regions

logger = logging.getLogger(__name__)

MAX_LINKS = 12

Rule = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre node counts per blocker dimension

    nodes_h is per piece between link endpoint heights; nodes_theta is
    spread over the pieces between link-direction kinks.
    """
    nodes_l: int = 16
    nodes_w: int = 16
    nodes_h: int = 8
    nodes_theta: int = 16
    workers: int = 1
    max_exact: int = DEFAULT_MAX_EXACT

    def __post_init__(self):
        for name in ("nodes_l", "nodes_w", "nodes_h", "nodes_theta", "workers", "max_exact"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")

    @classmethod
    def uniform(cls, nodes: int, **kwargs) -> "QuadratureSpec":
        """Same count for l, w and theta; h keeps half of it per piece"""
        return cls(nodes_l=nodes, nodes_w=nodes, nodes_h=max(1, nodes // 2),
                   nodes_theta=nodes, **kwargs)


@dataclass(frozen=True)
class LinkSet:
    """Links, the indices asserted clear, and the paths whose blockage is asked

    A path is a group of links that must all be clear for it to work; by
    default every link outside the clear set is its own path.
    """
    links: Tuple[Link, ...]
    clear: FrozenSet[int] = frozenset()
    paths: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "clear", frozenset(self.clear))
        if not self.links:
            raise InvalidArgumentError("link set must not be empty")
        n = len(self.links)
        if any(not 0 <= i < n for i in self.clear):
            raise InvalidArgumentError(f"clear indices {sorted(self.clear)} out of range for {n} links")
        if self.paths is None:
            paths = tuple((i,) for i in range(n) if i not in self.clear)
        else:
            paths = tuple(tuple(p) for p in self.paths)
            for p in paths:
                if not p or any(not 0 <= i < n for i in p):
                    raise InvalidArgumentError(f"invalid path {p} for {n} links")
        object.__setattr__(self, "paths", paths)

    @property
    def clear_mask(self) -> int:
        return _mask(self.clear)

    @property
    def path_masks(self) -> List[int]:
        return [_mask(p) for p in self.paths]


@dataclass
class CorrelationReport:
    """Correlated and independence-based all-blocked probabilities"""
    correlated: float
    independent: float
    expected_blockers: Dict[int, float] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.correlated - self.independent


def _mask(indices) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _dimension_rule(d: ScalarDist, nodes: int) -> Rule:
    """Probability-weighted rule for L or W"""
    if d.is_point_mass:
        return np.array([d.upper]), np.array([1.0])
    x, w = gauss_legendre(0.0, d.max, nodes)
    return x, w / d.max


def _height_rule(height: Optional[ScalarDist], links: Sequence[Link], nodes: int) -> Rule:
    """Piecewise rule split at every link endpoint height"""
    if height is None:
        return np.array([math.inf]), np.array([1.0])
    if height.is_point_mass:
        return np.array([height.upper]), np.array([1.0])
    cuts = {0.0, height.max}
    for link in links:
        for z in (link.height_a, link.height_b):
            if 0.0 < z < height.max:
                cuts.add(z)
    x, w = piecewise_gauss_legendre(sorted(cuts), nodes)
    return x, w / height.max


def _orientation_rule(orientation: ScalarDist, links: Sequence[Link], nodes: int) -> Rule:
    """Rule over one period of theta, split where a link's |sin| or |cos| term has a kink

    Areas repeat with period pi, so the period starts at the first kink
    rather than at 0. Rotating every link then rotates the nodes with them.
    """
    if orientation.is_point_mass:
        return np.array([orientation.upper]), np.array([1.0])
    kinks = set()
    for link in links:
        if link.length <= 0.0:
            continue
        for angle in (link.azimuth, link.azimuth + 0.5 * math.pi):
            a = math.fmod(angle, math.pi)
            if a < 0.0:
                a += math.pi
            kinks.add(a)
    if kinks:
        cuts = sorted(kinks)
        cuts.append(cuts[0] + math.pi)
    else:
        cuts = [0.0, math.pi]
    x, w = proportional_gauss_legendre(cuts, nodes)
    return x, w / math.pi


def _union_by_row(regions: Sequence[PolygonBatch], mask: int, max_exact: int) -> np.ndarray:
    """Per-row union areas for masks beyond the exact lattice"""
    members = [r for i, r in enumerate(regions) if mask >> i & 1]
    out = np.zeros(regions[0].size)
    for row in np.unique(np.concatenate([r.index for r in members])):
        out[row] = union_area([r.polygon(row) for r in members], max_exact=max_exact)
    return out


def _theta_slice(task) -> np.ndarray:
    """Weighted union areas for one orientation node, summed over l, w, h"""
    links, masks, theta, l_rule, w_rule, h_rule, max_exact = task
    l, w, h = (g.ravel() for g in np.meshgrid(l_rule[0], w_rule[0], h_rule[0], indexing="ij"))
    weights = np.einsum("i,j,k->ijk", l_rule[1], w_rule[1], h_rule[1]).ravel()
    regions = [blocking_regions(link, l, w, h, theta) for link in links]
    lattice = BatchLattice(regions)
    totals = np.zeros(len(masks))
    for k, mask in enumerate(masks):
        if _popcount(mask) <= max_exact:
            areas = lattice.union_area(mask)
        else:
            areas = _union_by_row(regions, mask, max_exact)
        totals[k] = float(weights @ areas)
    return totals


def expected_union_blockers(links: Sequence[Link], dist: ShapeDistribution,
                            quad: QuadratureSpec, masks: Sequence[int]) -> np.ndarray:
    """E[K] of the union of the links selected by each bitmask, one quadrature pass"""
    links = tuple(links)
    if not links:
        raise InvalidArgumentError("at least one link is required")
    masks = [int(m) for m in masks]
    if dist.density == 0.0 or not masks:
        return np.zeros(len(masks))

    l_rule = _dimension_rule(dist.length, quad.nodes_l)
    w_rule = _dimension_rule(dist.width, quad.nodes_w)
    h_rule = _height_rule(dist.height, links, quad.nodes_h)
    t_rule = _orientation_rule(dist.orientation, links, quad.nodes_theta)
    logger.debug("Union quadrature: %d links, %d subsets, %dx%dx%dx%d nodes",
                 len(links), len(masks), len(l_rule[0]), len(w_rule[0]),
                 len(h_rule[0]), len(t_rule[0]))

    tasks = [(links, masks, theta, l_rule, w_rule, h_rule, quad.max_exact) for theta in t_rule[0]]
    slices = ordered_map(_theta_slice, tasks, workers=quad.workers)
    total = np.zeros(len(masks))
    for weight, part in zip(t_rule[1], slices):
        total += weight * part
    return dist.density * total


def expected_blockers_union(links: Sequence[Link], dist: ShapeDistribution,
                            quad: QuadratureSpec = QuadratureSpec()) -> float:
    """E[K_A] with A = all given links"""
    return float(expected_union_blockers(links, dist, quad, [(1 << len(links)) - 1])[0])


def _inclusion_exclusion_terms(path_masks: Sequence[int], clear: int) -> List[Tuple[int, int]]:
    """(subset size, link mask incl. the clear set) for every non-empty path subset"""
    terms = []
    for k in range(1, len(path_masks) + 1):
        for subset in combinations(path_masks, k):
            union = clear
            for m in subset:
                union |= m
            terms.append((k, union))
    return terms


def _joint_values(ls: LinkSet, dist: ShapeDistribution, quad: QuadratureSpec,
                  masks: Sequence[int]) -> Tuple[Dict[int, float], float]:
    """E[K] for every mask and for the clear set, from one quadrature pass"""
    if len(ls.links) > MAX_LINKS:
        raise UnsupportedSizeError(f"{len(ls.links)} links exceed the limit of {MAX_LINKS}")
    clear = ls.clear_mask
    needed = sorted(set(masks) | ({clear} if clear else set()))
    values = dict(zip(needed, expected_union_blockers(ls.links, dist, quad, needed)))
    return values, (values[clear] if clear else 0.0)


def _correlated(terms, values: Dict[int, float], base: float) -> float:
    ok_any = 0.0
    for k, union in terms:
        sign = 1.0 if k % 2 else -1.0
        ok_any += sign * math.exp(-max(values[union] - base, 0.0))
    raw = 1.0 - ok_any
    if not -1e-9 <= raw <= 1.0 + 1e-9:
        logger.warning("Inclusion-exclusion left [0, 1]: %.3e", raw)
    return min(max(raw, 0.0), 1.0)


def _independent(unions: Sequence[int], values: Dict[int, float], base: float) -> float:
    prob = 1.0
    for union in unions:
        prob *= -math.expm1(-max(values[union] - base, 0.0))
    return prob


def p_all_blocked(ls: LinkSet, dist: ShapeDistribution,
                  quad: QuadratureSpec = QuadratureSpec()) -> float:
    """P(every path blocked | clear links unblocked) by inclusion-exclusion

    Conditioning on the clear set C uses E[K_A | C] = E[K_(A u C)] - E[K_C].
    """
    if not ls.paths:
        return 1.0
    terms = _inclusion_exclusion_terms(ls.path_masks, ls.clear_mask)
    values, base = _joint_values(ls, dist, quad, [u for _, u in terms])
    return _correlated(terms, values, base)


def p_all_blocked_independent(ls: LinkSet, dist: ShapeDistribution,
                              quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Product of per-path blockage probabilities"""
    if not ls.paths:
        return 1.0
    unions = [m | ls.clear_mask for m in ls.path_masks]
    values, base = _joint_values(ls, dist, quad, unions)
    return _independent(unions, values, base)


def compare_correlation(ls: LinkSet, dist: ShapeDistribution,
                        quad: QuadratureSpec = QuadratureSpec()) -> CorrelationReport:
    """Both views of the same link set; the ordering is only guaranteed for two paths"""
    if not ls.paths:
        return CorrelationReport(1.0, 1.0)
    clear = ls.clear_mask
    terms = _inclusion_exclusion_terms(ls.path_masks, clear)
    unions = [m | clear for m in ls.path_masks]
    values, base = _joint_values(ls, dist, quad, [u for _, u in terms] + unions)
    report = CorrelationReport(
        correlated=_correlated(terms, values, base),
        independent=_independent(unions, values, base),
        expected_blockers={u: values[u] - base for u in unions},
    )
    if len(ls.paths) == 2 and report.gap < -1e-9:
        logger.warning("Correlated %.6f below independent %.6f for two paths",
                       report.correlated, report.independent)
    return report
