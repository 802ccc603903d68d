"""
src/core/geom2d.py - Exact 2D geometry for blocking regions

Convex polygons are vertex tuples in counterclockwise order. Unions are
evaluated by inclusion-exclusion over convex intersections, with a grid
estimate as fallback for large inputs.
"""

import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

EPS = 1e-9
DEFAULT_MAX_EXACT = 10


class Point2(NamedTuple):
    """Point in the plane (meters)"""
    x: float
    y: float


class ConvexPolygon(NamedTuple):
    """Convex region, vertices counterclockwise; fewer than 3 vertices means zero area"""
    vertices: Tuple[Point2, ...] = ()

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    def translated(self, dx: float, dy: float) -> "ConvexPolygon":
        return ConvexPolygon(tuple(Point2(p.x + dx, p.y + dy) for p in self.vertices))

    def rotated(self, angle: float) -> "ConvexPolygon":
        c, s = math.cos(angle), math.sin(angle)
        return ConvexPolygon(tuple(Point2(c * p.x - s * p.y, s * p.x + c * p.y)
                                   for p in self.vertices))


EMPTY = ConvexPolygon(())


def _cross(o: Point2, a: Point2, b: Point2) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def convex_hull(points: Sequence[Point2]) -> ConvexPolygon:
    """Monotone-chain hull, counterclockwise, collinear and duplicate points dropped"""
    pts = sorted(set(Point2(float(p[0]), float(p[1])) for p in points))
    if len(pts) < 3:
        return ConvexPolygon(tuple(pts))

    lower: List[Point2] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= EPS * EPS:
            lower.pop()
        lower.append(p)
    upper: List[Point2] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= EPS * EPS:
            upper.pop()
        upper.append(p)
    return ConvexPolygon(tuple(_dedup(lower[:-1] + upper[:-1])))


def _dedup(vertices: List[Point2]) -> List[Point2]:
    """Drop consecutive vertices closer than EPS (cyclically)"""
    out: List[Point2] = []
    for v in vertices:
        if not out or abs(v.x - out[-1].x) > EPS or abs(v.y - out[-1].y) > EPS:
            out.append(v)
    while len(out) > 1 and abs(out[0].x - out[-1].x) <= EPS and abs(out[0].y - out[-1].y) <= EPS:
        out.pop()
    return out


def minkowski_segment_rect(p0: Point2, p1: Point2, l: float, w: float,
                           theta: float) -> ConvexPolygon:
    """Centers of an l x w rectangle (length along theta) that touch segment [p0, p1]

    This is the Minkowski sum of the segment with the origin-centered
    rectangle: a hexagon in general, a parallelogram for w = 0 and the
    rectangle itself for p0 = p1.
    """
    if l < 0 or w < 0:
        raise InvalidArgumentError(f"rectangle dimensions must be >= 0, got l={l}, w={w}")

    c, s = math.cos(theta), math.sin(theta)
    ux, uy = 0.5 * l * c, 0.5 * l * s
    vx, vy = -0.5 * w * s, 0.5 * w * c
    corners = ((ux + vx, uy + vy), (-ux + vx, -uy + vy),
               (-ux - vx, -uy - vy), (ux - vx, uy - vy))
    points = [Point2(p.x + cx, p.y + cy) for p in (p0, p1) for cx, cy in corners]
    return convex_hull(points)


def polygon_area(p: ConvexPolygon) -> float:
    """Shoelace area, 0 for empty or degenerate polygons"""
    vs = p.vertices
    n = len(vs)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        a, b = vs[i], vs[(i + 1) % n]
        acc += a.x * b.y - b.x * a.y
    return abs(acc) * 0.5


def _clip(subject: List[Point2], a: Point2, b: Point2) -> List[Point2]:
    """Keep the part of subject left of the directed line a->b"""
    dx, dy = b.x - a.x, b.y - a.y
    norm = math.hypot(dx, dy)
    if norm <= EPS:
        return subject

    def side(p: Point2) -> float:
        return (dx * (p.y - a.y) - dy * (p.x - a.x)) / norm

    out: List[Point2] = []
    prev = subject[-1]
    prev_side = side(prev)
    for cur in subject:
        cur_side = side(cur)
        if cur_side >= -EPS:
            if prev_side < -EPS:
                out.append(_intersection(prev, cur, prev_side, cur_side))
            out.append(cur)
        elif prev_side >= -EPS:
            out.append(_intersection(prev, cur, prev_side, cur_side))
        prev, prev_side = cur, cur_side
    return out


def _intersection(p: Point2, q: Point2, sp: float, sq: float) -> Point2:
    t = sp / (sp - sq)
    return Point2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))


def convex_intersect(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon:
    """Intersection by clipping a against every edge of b"""
    if a.is_empty or b.is_empty:
        return EMPTY
    out = list(a.vertices)
    vb = b.vertices
    for i in range(len(vb)):
        out = _clip(out, vb[i], vb[(i + 1) % len(vb)])
        if len(out) < 3:
            return EMPTY
    out = _dedup(out)
    if len(out) < 3:
        return EMPTY
    return ConvexPolygon(tuple(out))


def contains(p: ConvexPolygon, point: Point2, tol: float = EPS) -> bool:
    """Closed point-in-polygon test; degenerate polygons contain nothing"""
    vs = p.vertices
    if len(vs) < 3:
        return False
    for i in range(len(vs)):
        a, b = vs[i], vs[(i + 1) % len(vs)]
        edge = math.hypot(b.x - a.x, b.y - a.y)
        if _cross(a, b, point) < -tol * edge:
            return False
    return True


class IntersectionLattice:
    """Intersection areas of every subset of a polygon list, computed lazily

    Subset intersections are built by adding one polygon to the cached
    intersection of the subset without its highest member, so a pair's
    result is reused by every triple containing it. Empty intersections
    prune all of their supersets.
    """

    def __init__(self, polys: Sequence[ConvexPolygon]):
        self.polys = list(polys)
        self._shapes: Dict[int, ConvexPolygon] = {}
        self._areas: Dict[int, float] = {}
        for i, poly in enumerate(self.polys):
            self._shapes[1 << i] = poly
            self._areas[1 << i] = polygon_area(poly)

    def intersection(self, mask: int) -> ConvexPolygon:
        shape = self._shapes.get(mask)
        if shape is None:
            top = mask.bit_length() - 1
            rest = mask & ~(1 << top)
            base = self.intersection(rest)
            shape = EMPTY if base.is_empty else convex_intersect(base, self.polys[top])
            self._shapes[mask] = shape
        return shape

    def intersection_area(self, mask: int) -> float:
        area = self._areas.get(mask)
        if area is None:
            area = polygon_area(self.intersection(mask))
            self._areas[mask] = area
        return area

    def union_area(self, mask: int) -> float:
        """Inclusion-exclusion over the non-empty submasks of mask"""
        if mask == 0:
            return 0.0
        total = 0.0
        sub = mask
        while sub:
            area = self.intersection_area(sub)
            if area > 0.0:
                total += area if bin(sub).count("1") % 2 else -area
            sub = (sub - 1) & mask
        return max(total, 0.0)


def union_area(polys: Sequence[ConvexPolygon], max_exact: int = DEFAULT_MAX_EXACT,
               rel_tol: float = 1e-3) -> float:
    """Exact union area for up to max_exact polygons, grid estimate beyond"""
    polys = [p for p in polys if not p.is_empty]
    if not polys:
        return 0.0
    if len(polys) == 1:
        return polygon_area(polys[0])
    if len(polys) > max_exact:
        logger.warning("Union of %d polygons exceeds exact limit %d, using grid estimate",
                       len(polys), max_exact)
        return grid_union_area(polys, rel_tol=rel_tol)
    return IntersectionLattice(polys).union_area((1 << len(polys)) - 1)


def _covered(polys: Sequence[ConvexPolygon], xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    inside_any = np.zeros(xs.shape, dtype=bool)
    for poly in polys:
        vs = np.asarray(poly.vertices, dtype=float)
        inside = np.ones(xs.shape, dtype=bool)
        for (ax, ay), (bx, by) in zip(vs, np.roll(vs, -1, axis=0)):
            inside &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= 0.0
        inside_any |= inside
    return inside_any


def grid_union_area(polys: Sequence[ConvexPolygon], rel_tol: float = 1e-3,
                    start_cells: int = 256, max_cells: int = 8192,
                    cell_size: Optional[float] = None) -> float:
    """Midpoint-grid estimate of the union area

    With cell_size set, a single grid of that pitch is evaluated (the
    rasterization oracle). Otherwise the grid is refined until two
    successive estimates agree to rel_tol.
    """
    polys = [p for p in polys if not p.is_empty]
    if not polys:
        return 0.0
    allv = np.asarray([v for p in polys for v in p.vertices], dtype=float)
    (x0, y0), (x1, y1) = allv.min(axis=0), allv.max(axis=0)
    width, height = max(x1 - x0, EPS), max(y1 - y0, EPS)

    def estimate(nx: int, ny: int) -> float:
        dx, dy = width / nx, height / ny
        total = 0
        # row bands keep memory bounded on fine grids
        band = max(1, 4_000_000 // nx)
        xs = x0 + (np.arange(nx) + 0.5) * dx
        for j0 in range(0, ny, band):
            ys = y0 + (np.arange(j0, min(ny, j0 + band)) + 0.5) * dy
            gx, gy = np.meshgrid(xs, ys)
            total += int(np.count_nonzero(_covered(polys, gx, gy)))
        return total * dx * dy

    if cell_size is not None:
        return estimate(max(1, int(math.ceil(width / cell_size))),
                        max(1, int(math.ceil(height / cell_size))))

    n = start_cells
    previous = estimate(n, n)
    while n < max_cells:
        n *= 2
        current = estimate(n, n)
        if current == 0.0 or abs(current - previous) <= rel_tol * current:
            return current
        previous = current
    return previous


class PolygonBatch:
    """Convex polygons for a subset of the rows of a node grid

    Row index[k] holds the counterclockwise vertices xs[k], ys[k], padded
    to a common slot count by repeating vertices. Rows missing from index
    are empty.
    """

    def __init__(self, index: np.ndarray, xs: np.ndarray, ys: np.ndarray, size: int):
        self.index = np.asarray(index, dtype=np.intp)
        self.xs = xs
        self.ys = ys
        self.size = int(size)

    @classmethod
    def empty(cls, size: int) -> "PolygonBatch":
        return cls(np.empty(0, dtype=np.intp), np.empty((0, 1)), np.empty((0, 1)), size)

    def __len__(self) -> int:
        return len(self.index)

    def areas(self) -> np.ndarray:
        """Shoelace area per grid row, 0 where the row is empty"""
        out = np.zeros(self.size)
        if len(self.index):
            cross = self.xs * np.roll(self.ys, -1, axis=1) - np.roll(self.xs, -1, axis=1) * self.ys
            out[self.index] = 0.5 * np.abs(cross.sum(axis=1))
        return out

    def polygon(self, row: int) -> ConvexPolygon:
        k = int(np.searchsorted(self.index, row))
        if k == len(self.index) or self.index[k] != row:
            return EMPTY
        return convex_hull([Point2(x, y) for x, y in zip(self.xs[k], self.ys[k])])


def minkowski_segment_rect_batch(x0, y0, x1, y1, l, w, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Vertex arrays of minkowski_segment_rect for arrays of segments and sizes

    Edges of the sum are the rectangle edges and the segment taken both
    ways, walked in angular order. The polygon is centrally symmetric about
    the segment midpoint, which fixes its position.
    """
    x0, y0, x1, y1, l, w = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                                 for v in (x0, y0, x1, y1, l, w)))
    if np.any(l < 0) or np.any(w < 0):
        raise InvalidArgumentError("rectangle dimensions must be >= 0")
    c, s = math.cos(theta), math.sin(theta)
    sx, sy = x1 - x0, y1 - y0
    ex = np.stack((l * c, -w * s, -l * c, w * s, sx, -sx), axis=1)
    ey = np.stack((l * s, w * c, -l * s, -w * c, sy, -sy), axis=1)
    order = np.argsort(np.mod(np.arctan2(ey, ex), 2.0 * math.pi), axis=1, kind="stable")
    xs = np.cumsum(np.take_along_axis(ex, order, axis=1), axis=1)
    ys = np.cumsum(np.take_along_axis(ey, order, axis=1), axis=1)
    cx = 0.5 * (x0 + x1) - 0.5 * (xs.min(axis=1) + xs.max(axis=1))
    cy = 0.5 * (y0 + y1) - 0.5 * (ys.min(axis=1) + ys.max(axis=1))
    return xs + cx[:, None], ys + cy[:, None]


def _clip_rows(xs: np.ndarray, ys: np.ndarray, ax: np.ndarray, ay: np.ndarray,
               bx: np.ndarray, by: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One clipping step per row against the directed line a->b

    Returns the clipped vertices and the rows that kept any point.
    """
    n = xs.shape[0]
    dx, dy = bx - ax, by - ay
    norm = np.hypot(dx, dy)
    proper = norm > EPS
    side = (dx[:, None] * (ys - ay[:, None]) - dy[:, None] * (xs - ax[:, None])) \
        / np.where(proper, norm, 1.0)[:, None]
    side[~proper] = 1.0

    inside = side >= -EPS
    px, py = np.roll(xs, 1, axis=1), np.roll(ys, 1, axis=1)
    ps, crossing = np.roll(side, 1, axis=1), inside != np.roll(inside, 1, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(crossing, ps / (ps - side), 0.0)
    cand_x = np.stack((px + t * (xs - px), xs), axis=2).reshape(n, -1)
    cand_y = np.stack((py + t * (ys - py), ys), axis=2).reshape(n, -1)
    valid = np.stack((crossing, inside), axis=2).reshape(n, -1)

    count = valid.sum(axis=1)
    width = int(count.max()) if n else 0
    if width == 0:
        return np.zeros((n, 1)), np.zeros((n, 1)), np.zeros(n, dtype=bool)
    rows, cols = np.nonzero(valid)
    dest = (np.cumsum(valid, axis=1) - 1)[rows, cols]
    out_x, out_y = np.zeros((n, width)), np.zeros((n, width))
    out_x[rows, dest] = cand_x[rows, cols]
    out_y[rows, dest] = cand_y[rows, cols]
    # pad with the last kept vertex
    fill = np.minimum(np.arange(width)[None, :], np.maximum(count - 1, 0)[:, None])
    return (np.take_along_axis(out_x, fill, axis=1), np.take_along_axis(out_y, fill, axis=1),
            count > 0)


def intersect_batches(a: PolygonBatch, b: PolygonBatch) -> PolygonBatch:
    """Row-wise convex_intersect of two batches over the same grid"""
    rows, ia, ib = np.intersect1d(a.index, b.index, assume_unique=True, return_indices=True)
    if not len(rows):
        return PolygonBatch.empty(a.size)
    xs, ys = a.xs[ia], a.ys[ia]
    cx, cy = b.xs[ib], b.ys[ib]
    # bounding boxes must meet, and a clipper needs at least one proper edge
    keep = ((xs.min(axis=1) <= cx.max(axis=1) + EPS) & (cx.min(axis=1) <= xs.max(axis=1) + EPS)
            & (ys.min(axis=1) <= cy.max(axis=1) + EPS) & (cy.min(axis=1) <= ys.max(axis=1) + EPS)
            & np.any(np.hypot(np.roll(cx, -1, axis=1) - cx, np.roll(cy, -1, axis=1) - cy) > EPS,
                     axis=1))
    rows, xs, ys, cx, cy = rows[keep], xs[keep], ys[keep], cx[keep], cy[keep]

    m = cx.shape[1]
    for k in range(m):
        if not len(rows):
            return PolygonBatch.empty(a.size)
        j = (k + 1) % m
        xs, ys, kept = _clip_rows(xs, ys, cx[:, k], cy[:, k], cx[:, j], cy[:, j])
        if not kept.all():
            rows, xs, ys, cx, cy = rows[kept], xs[kept], ys[kept], cx[kept], cy[kept]
    return PolygonBatch(rows, xs, ys, a.size)


class BatchLattice:
    """IntersectionLattice over batches: one area array per subset mask"""

    def __init__(self, batches: Sequence[PolygonBatch]):
        self.batches = list(batches)
        self.size = self.batches[0].size if self.batches else 0
        self._shapes: Dict[int, PolygonBatch] = {1 << i: b for i, b in enumerate(self.batches)}
        self._areas: Dict[int, np.ndarray] = {}

    def intersection(self, mask: int) -> PolygonBatch:
        shape = self._shapes.get(mask)
        if shape is None:
            top = mask.bit_length() - 1
            base = self.intersection(mask & ~(1 << top))
            shape = intersect_batches(base, self.batches[top]) if len(base) else base
            self._shapes[mask] = shape
        return shape

    def intersection_area(self, mask: int) -> np.ndarray:
        area = self._areas.get(mask)
        if area is None:
            area = self.intersection(mask).areas()
            self._areas[mask] = area
        return area

    def union_area(self, mask: int) -> np.ndarray:
        total = np.zeros(self.size)
        sub = mask
        while sub:
            if len(self.intersection(sub)):
                if bin(sub).count("1") % 2:
                    total += self.intersection_area(sub)
                else:
                    total -= self.intersection_area(sub)
            sub = (sub - 1) & mask
        return np.maximum(total, 0.0)
