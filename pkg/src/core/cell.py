"""
src/core/cell.py - Relay-assisted mmWave cell

BS at the origin, N relays equispaced on a ring of radius r at height h_R,
users uniform over the disc. A user fails when no path (direct, or BS ->
relay -> user) is both unblocked and within its link budget.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import speed_of_light

from ..utils.parallel import ordered_map
from ..utils.quadrature import gauss_legendre, proportional_gauss_legendre
from .exceptions import InvalidArgumentError
from .geom2d import Point2
from .mc import Estimate, SampleRegion, estimate_p_all_blocked
from .multilink import CorrelationReport, LinkSet, QuadratureSpec, compare_correlation, p_all_blocked
from .shapes import Link, ScalarDist, ShapeDistribution, beta, eta, mu, p_blocked, p_footprint

logger = logging.getLogger(__name__)

MIN_PATH_LOSS_DISTANCE = 1.0


@dataclass(frozen=True)
class LinkBudget:
    """Downlink budget of one link class (dBm, dBi, Hz)"""
    tx_power: float
    tx_gain: float
    rx_gain: float
    sensitivity: float
    frequency: float = 28e9
    pathloss_exponent: float = 2.3

    def __post_init__(self):
        if not self.frequency > 0:
            raise InvalidArgumentError(f"frequency must be > 0, got {self.frequency}")
        if not self.pathloss_exponent > 0:
            raise InvalidArgumentError(f"path-loss exponent must be > 0, got {self.pathloss_exponent}")


@dataclass(frozen=True)
class LinkBudgets:
    """One budget per link class: BS->UE, BS->relay, relay->UE"""
    bu: LinkBudget
    br: LinkBudget
    ru: LinkBudget

    @classmethod
    def reference(cls) -> "LinkBudgets":
        """Reference parameters; the relay's receive gain is not counted on BS->relay"""
        return cls(
            bu=LinkBudget(tx_power=25.0, tx_gain=23.0, rx_gain=0.0, sensitivity=-79.5),
            br=LinkBudget(tx_power=25.0, tx_gain=23.0, rx_gain=0.0, sensitivity=-90.2),
            ru=LinkBudget(tx_power=20.0, tx_gain=23.0, rx_gain=0.0, sensitivity=-79.5),
        )


def urban_blockers(density: float = 1e-4, h_max: float = 30.0) -> ShapeDistribution:
    """L, W, H ~ U[0, 30 m], orientation ~ U[0, pi]"""
    return ShapeDistribution(
        length=ScalarDist.uniform(30.0),
        width=ScalarDist.uniform(30.0),
        height=ScalarDist.uniform(h_max),
        orientation=ScalarDist.uniform(math.pi),
        density=density,
    )


@dataclass(frozen=True)
class CellScenario:
    """Cell geometry, relay ring, blocker law and optional link budgets"""
    shapes: ShapeDistribution = field(default_factory=urban_blockers)
    radius: float = 300.0
    bs_height: float = 40.0
    ue_height: float = 1.5
    relay_count: int = 3
    relay_radius: float = 150.0
    relay_height: float = 20.0
    sectorized: bool = True
    budgets: Optional[LinkBudgets] = None
    bs_relay_los_assumed: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgumentError(f"cell radius must be > 0, got {self.radius}")
        if not 0 <= self.relay_radius <= self.radius:
            raise InvalidArgumentError(f"relay radius {self.relay_radius} outside [0, {self.radius}]")
        if self.relay_count < 0:
            raise InvalidArgumentError(f"relay count must be >= 0, got {self.relay_count}")
        if min(self.bs_height, self.ue_height, self.relay_height) < 0:
            raise InvalidArgumentError("heights must be >= 0")


@dataclass(frozen=True)
class UserPosition:
    """Polar position of a user: distance d to the BS and azimuth phi"""
    d: float
    phi: float

    def __post_init__(self):
        if not self.d >= 0:
            raise InvalidArgumentError(f"user distance must be >= 0, got {self.d}")

    @property
    def point(self) -> Point2:
        return Point2(self.d * math.cos(self.phi), self.d * math.sin(self.phi))


@dataclass
class Candidates:
    """Links, feasible paths and clear set seen by one user"""
    links: List[Link] = field(default_factory=list)
    paths: List[Tuple[int, ...]] = field(default_factory=list)
    clear: FrozenSet[int] = frozenset()
    infeasible: int = 0

    def link_set(self) -> Optional[LinkSet]:
        if not self.paths:
            return None
        return LinkSet(tuple(self.links), self.clear, tuple(self.paths))


@dataclass
class RelayOptimum:
    """Best grid point and the full evaluated table"""
    relay_radius: float
    relay_height: float
    failure: float
    table: List[Tuple[float, float, float]] = field(default_factory=list)


def relay_azimuths(n: int) -> List[float]:
    """psi_n = (n - 1) 2 pi / N"""
    if n <= 0:
        return []
    return [k * 2.0 * math.pi / n for k in range(n)]


def relay_positions(s: CellScenario) -> List[Point2]:
    return [Point2(s.relay_radius * math.cos(psi), s.relay_radius * math.sin(psi))
            for psi in relay_azimuths(s.relay_count)]


def sector_of(phi: float, n: int) -> int:
    """Index of the sector [psi_k - pi/N, psi_k + pi/N) holding phi; edges go to the lower index"""
    if n <= 1:
        return 0
    width = 2.0 * math.pi / n
    x = math.fmod(phi + 0.5 * width, 2.0 * math.pi)
    if x < 0.0:
        x += 2.0 * math.pi
    x /= width
    k = int(math.floor(x))
    if k > 0 and x == k:
        k -= 1
    return min(k, n - 1)


def path_loss_db(distance3d: float, budget: LinkBudget) -> float:
    """Close-in free-space reference at 1 m plus 10 alpha log10(d)"""
    if not distance3d > 0:
        raise InvalidArgumentError(f"path-loss distance must be > 0, got {distance3d}")
    d = max(distance3d, MIN_PATH_LOSS_DISTANCE)
    reference = 20.0 * math.log10(4.0 * math.pi * budget.frequency / speed_of_light)
    return reference + 10.0 * budget.pathloss_exponent * math.log10(d)


def max_allowable_path_loss(budget: LinkBudget) -> float:
    return budget.tx_power + budget.tx_gain + budget.rx_gain - budget.sensitivity


def link_feasible(link: Link, budget: Optional[LinkBudget]) -> bool:
    """LOS link closes its budget; blockers play no part"""
    if budget is None:
        return True
    distance = max(link.length_3d, MIN_PATH_LOSS_DISTANCE)
    return path_loss_db(distance, budget) <= max_allowable_path_loss(budget)


def candidate_paths(u: UserPosition, s: CellScenario) -> Candidates:
    """Direct path plus the relay paths the user may use, infeasible ones removed"""
    bs = Point2(0.0, 0.0)
    ue = u.point
    budgets = s.budgets
    out = Candidates()
    clear = set()

    bu = Link(bs, ue, s.bs_height, s.ue_height)
    if link_feasible(bu, budgets.bu if budgets else None):
        out.links.append(bu)
        out.paths.append((0,))
    else:
        out.infeasible += 1

    positions = relay_positions(s)
    if s.sectorized and positions:
        relays = [sector_of(u.phi, s.relay_count)]
    else:
        relays = list(range(len(positions)))

    for n in relays:
        br = Link(bs, positions[n], s.bs_height, s.relay_height)
        ru = Link(positions[n], ue, s.relay_height, s.ue_height)
        ok = (link_feasible(br, budgets.br if budgets else None)
              and link_feasible(ru, budgets.ru if budgets else None))
        if not ok:
            out.infeasible += 1
            if not s.bs_relay_los_assumed:
                continue
        out.links.append(br)
        i_br = len(out.links) - 1
        if s.bs_relay_los_assumed:
            clear.add(i_br)
        if ok:
            out.links.append(ru)
            out.paths.append((i_br, len(out.links) - 1))

    out.clear = frozenset(clear)
    return out


def _check_inside(u: UserPosition, s: CellScenario) -> None:
    if u.d > s.radius * (1.0 + 1e-12):
        raise InvalidArgumentError(f"user distance {u.d} outside the cell radius {s.radius}")


def failure_prob_at(u: UserPosition, s: CellScenario,
                    quad: QuadratureSpec = QuadratureSpec()) -> float:
    """P(allKO | D=d, Phi=phi)"""
    _check_inside(u, s)
    ls = candidate_paths(u, s).link_set()
    if ls is None:
        return 1.0
    return p_all_blocked(ls, s.shapes, quad)


def compare_failure_at(u: UserPosition, s: CellScenario,
                       quad: QuadratureSpec = QuadratureSpec()) -> CorrelationReport:
    """Correlated and independence-assumption failure probability at one position"""
    _check_inside(u, s)
    ls = candidate_paths(u, s).link_set()
    if ls is None:
        return CorrelationReport(1.0, 1.0)
    return compare_correlation(ls, s.shapes, quad)


def estimate_failure_at(u: UserPosition, s: CellScenario, trials: int, seed: int,
                        workers: int = 1) -> Estimate:
    """Monte Carlo counterpart of failure_prob_at"""
    _check_inside(u, s)
    ls = candidate_paths(u, s).link_set()
    if ls is None:
        return Estimate(1.0, 0.0, trials)
    region = SampleRegion.for_cell(s.radius, s.shapes)
    return estimate_p_all_blocked(ls, s.shapes, region, trials, seed, workers=workers)


def _failure_task(task) -> float:
    u, s, quad, independent = task
    if independent:
        return compare_failure_at(u, s, quad).independent
    return failure_prob_at(u, s, quad)


def average_failure_prob(s: CellScenario, quad: QuadratureSpec = QuadratureSpec(),
                         radial_nodes: int = 8, azimuth_nodes: int = 8,
                         independent: bool = False) -> float:
    """Failure probability averaged over a uniformly placed user

    With N relays the cell is invariant under rotation by 2 pi / N, so the
    azimuth integral runs over one sector only. independent=True averages
    the product-of-paths baseline instead.
    """
    if radial_nodes < 2 or azimuth_nodes < 2:
        raise InvalidArgumentError("radial and azimuth node counts must be >= 2")
    R, n = s.radius, s.relay_count

    cuts = [0.0, R]
    if n > 0 and 0.0 < s.relay_radius < R:
        cuts = [0.0, s.relay_radius, R]
    d_nodes, d_weights = proportional_gauss_legendre(cuts, radial_nodes)
    d_weights = d_weights * 2.0 * d_nodes / R ** 2

    if n == 0:
        phi_nodes, phi_weights = np.array([0.0]), np.array([1.0])
    else:
        half = math.pi / n
        phi_nodes, phi_weights = gauss_legendre(-half, half, azimuth_nodes)
        phi_weights = phi_weights * n / (2.0 * math.pi)

    inner = replace(quad, workers=1)
    tasks = [(UserPosition(float(d), float(phi)), s, inner, independent)
             for d in d_nodes for phi in phi_nodes]
    values = ordered_map(_failure_task, tasks, workers=quad.workers)
    grid = np.asarray(values).reshape(len(d_nodes), len(phi_nodes))
    total = float(d_weights @ grid @ phi_weights)
    logger.debug("Cell average over %d positions: %.6f", len(tasks), total)
    return min(max(total, 0.0), 1.0)


def mean_single_link_blockage(R: float, dist: ShapeDistribution, bs_height: float,
                              ue_height: float) -> float:
    """Closed-form cell average of 1 - exp(-(eta beta d + mu p)) without relays"""
    hi, lo = max(bs_height, ue_height), min(bs_height, ue_height)
    x = eta(hi, lo, dist.height) * beta(dist) * R
    mp = mu(lo, dist.height) * p_footprint(dist)
    if x <= 1e-12:
        return float(-np.expm1(-mp))
    return 1.0 - 2.0 * (np.expm1(x) - x) / (x * x) * math.exp(-(x + mp))


def mean_single_link_blockage_numeric(R: float, dist: ShapeDistribution, bs_height: float,
                                      ue_height: float, nodes: int = 64) -> float:
    """Gauss-Legendre average of the single-link p_blocked over f_D(d) = 2d/R^2"""
    d_nodes, d_weights = gauss_legendre(0.0, R, nodes)
    bs = Point2(0.0, 0.0)
    values = [p_blocked(Link(bs, Point2(float(d), 0.0), bs_height, ue_height), dist)
              for d in d_nodes]
    return float(np.sum(d_weights * 2.0 * d_nodes / R ** 2 * np.asarray(values)))


def optimize_relays(s_template: CellScenario, r_grid: Sequence[float], h_grid: Sequence[float],
                    quad: QuadratureSpec = QuadratureSpec(), radial_nodes: int = 8,
                    azimuth_nodes: int = 8, independent: bool = False) -> RelayOptimum:
    """Exhaustive search over (r, h_R); ties go to smaller r, then smaller h_R"""
    if len(r_grid) == 0 or len(h_grid) == 0:
        raise InvalidArgumentError("relay grids must not be empty")
    best: Optional[Tuple[float, float, float]] = None
    table = []
    for r in sorted(float(v) for v in r_grid):
        for h in sorted(float(v) for v in h_grid):
            scenario = replace(s_template, relay_radius=r, relay_height=h)
            value = average_failure_prob(scenario, quad, radial_nodes, azimuth_nodes,
                                         independent=independent)
            table.append((r, h, value))
            logger.info("r=%.1f m, h_R=%.1f m -> %.6f", r, h, value)
            if best is None or value < best[2]:
                best = (r, h, value)
    return RelayOptimum(best[0], best[1], best[2], table)
