"""
Gauss-Legendre rules on finite intervals, cached per order
"""

from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np


@lru_cache(maxsize=None)
def _gauss_legendre_1d(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cached wrapper around numpy's leggauss"""
    points, weights = np.polynomial.legendre.leggauss(order)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def gauss_legendre(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an order-point rule on [a, b]

    The weights integrate dx, i.e. they sum to b - a.
    """
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    points, weights = _gauss_legendre_1d(order)
    half = 0.5 * (b - a)
    return a + half * (points + 1.0), half * weights


def piecewise_gauss_legendre(breakpoints: Sequence[float],
                             order_per_piece: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite rule with the same order on every piece between sorted breakpoints"""
    nodes, weights = [], []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b - a <= 0.0:
            continue
        x, w = gauss_legendre(a, b, order_per_piece)
        nodes.append(x)
        weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def proportional_gauss_legendre(breakpoints: Sequence[float], total_order: int,
                                min_per_piece: int = 2) -> Tuple[np.ndarray, np.ndarray]:
    """Composite rule spreading roughly total_order nodes in proportion to piece length"""
    pieces = [(a, b) for a, b in zip(breakpoints[:-1], breakpoints[1:]) if b - a > 0.0]
    if not pieces:
        return np.empty(0), np.empty(0)
    span = sum(b - a for a, b in pieces)
    nodes, weights = [], []
    for a, b in pieces:
        order = max(min_per_piece, int(round(total_order * (b - a) / span)))
        x, w = gauss_legendre(a, b, order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)
