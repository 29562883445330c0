"""Shared oracles and generators for the test suite."""

import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from perronlab.geom_core import ConvexPolygon, Rect


def rect_boundary_points(r: Rect, per_side: int) -> np.ndarray:
    """Points along the rectangle boundary, corners included."""
    c = r.corners()
    pts = []
    for i in range(4):
        a, b = c[i], c[(i + 1) % 4]
        t = np.linspace(0.0, 1.0, per_side, endpoint=False)[:, None]
        pts.append(a + t * (b - a))
    return np.vstack(pts)


def brute_difference_hull(r1: Rect, r2: Rect, per_side: int = 25) -> ConvexPolygon:
    """Independent difference-set oracle: hull of sampled pairwise differences."""
    p = rect_boundary_points(r1, per_side)
    q = rect_boundary_points(r2, per_side)
    diffs = (p[:, None, :] - q[None, :, :]).reshape(-1, 2)
    hull = ConvexHull(diffs)
    return ConvexPolygon(diffs[hull.vertices])


def random_rect(rng: np.random.Generator, scale: float = 1.0) -> Rect:
    hl = rng.uniform(0.1, 1.0) * scale
    hw = rng.uniform(0.05, 1.0) * scale
    return Rect(hl, hw, rng.uniform(-math.pi / 2, math.pi / 2))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)
