import math

import numpy as np
import pytest

from perronlab.geom_core import ConvexPolygon, Rect, Triangle, paper_triangle
from perronlab.union_area import (
    union_area_convex_sweep,
    union_area_grid,
    union_area_star,
    union_area_triangles,
)

from conftest import random_rect


def rotated_square(side: float, angle: float) -> ConvexPolygon:
    return Rect(side / 2, side / 2, angle).polygon()


class TestUnionAreaStar:
    def test_single_square(self):
        assert math.isclose(union_area_star([rotated_square(2.0, 0.0)]), 4.0, rel_tol=1e-12)

    def test_square_with_rotated_copy(self):
        # square side 2 union its 45-degree rotation: 16 - 8 sqrt(2)
        polys = [rotated_square(2.0, 0.0), rotated_square(2.0, math.pi / 4)]
        expect = 16.0 - 8.0 * math.sqrt(2.0)
        got = union_area_star(polys)
        assert math.isclose(got, expect, rel_tol=1e-9)
        est, err = union_area_grid(polys, (-2, -2, 2, 2), 4096)
        assert abs(got - est) <= err

    def test_nested_gives_outer(self):
        inner = rotated_square(1.0, 0.2)
        outer = rotated_square(3.0, 0.2)
        assert math.isclose(union_area_star([inner, outer]), 9.0, rel_tol=1e-12)

    def test_rejects_polygon_missing_origin(self):
        off = rotated_square(1.0, 0.0).translate((5.0, 0.0))
        with pytest.raises(ValueError):
            union_area_star([off])

    def test_monotone_and_subadditive(self, rng):
        for _ in range(30):
            polys = [difference_like(rng) for _ in range(rng.integers(1, 6))]
            u_all = union_area_star(polys)
            u_head = union_area_star(polys[:-1]) if len(polys) > 1 else 0.0
            assert u_all >= u_head - 1e-12
            assert u_all <= sum(p.area for p in polys) + 1e-9

    def test_scaling_quadratic(self, rng):
        polys = [difference_like(rng) for _ in range(4)]
        base = union_area_star(polys)
        for s in (0.5, 2.0):
            scaled = [p.scaled(s) for p in polys]
            assert math.isclose(union_area_star(scaled), s * s * base, rel_tol=1e-9)


def difference_like(rng) -> ConvexPolygon:
    from perronlab.geom_core import difference_set

    return difference_set(random_rect(rng), random_rect(rng))


class TestUnionAreaTriangles:
    def test_single(self):
        assert math.isclose(union_area_triangles([paper_triangle(0.0, 2.0)]), 1.0)
        assert math.isclose(
            union_area_triangles([Triangle((0.0, 1.0), (0.0, 0.0), (2.0, 0.0))]), 1.0
        )

    def test_disjoint_add(self):
        ts = [paper_triangle(0.0, 1.0), paper_triangle(5.0, 6.0).translate((0, 0))]
        assert math.isclose(union_area_triangles(ts), 1.0)

    def test_half_shifted_overlap(self):
        t = Triangle((0, 1), (0, 0), (1, 0))
        ts = [t, t.translate((0.5, 0.0))]
        got = union_area_triangles(ts)
        # overlap of the two congruent right triangles is 1/8
        assert math.isclose(got, 0.875, rel_tol=1e-12)
        est, err = union_area_grid(
            [x.as_polygon() for x in ts], (-0.5, -0.5, 2.0, 1.5), 4096
        )
        assert abs(got - est) <= err

    def test_rejects_misplaced(self):
        with pytest.raises(ValueError):
            union_area_triangles([Triangle((0, 0.5), (0, 0), (1, 0))])
        with pytest.raises(ValueError):
            union_area_triangles([Triangle((0, 1), (0, 0.2), (1, 0))])

    def test_monotone(self, rng):
        ts = random_triangles(rng, 6)
        u = 0.0
        for k in range(1, len(ts) + 1):
            nxt = union_area_triangles(ts[:k])
            assert nxt >= u - 1e-12
            u = nxt

    def test_matches_convex_sweep(self, rng):
        for _ in range(20):
            ts = random_triangles(rng, int(rng.integers(1, 8)))
            a = union_area_triangles(ts)
            b = union_area_convex_sweep([t.as_polygon() for t in ts])
            assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def random_triangles(rng, count):
    out = []
    for _ in range(count):
        left = rng.uniform(-3, 3)
        width = rng.uniform(0.1, 2.0)
        apex = rng.uniform(-3, 3)
        out.append(Triangle((apex, 1.0), (left, 0.0), (left + width, 0.0)))
    return out


class TestUnionAreaGrid:
    def test_unit_square(self):
        sq = ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        est, err = union_area_grid([sq], (-0.5, -0.5, 1.5, 1.5), 1024)
        assert abs(est - 1.0) <= err
        assert err <= 4.0 * math.sqrt(2.0) * (2.0 / 1024)

    def test_triangle(self):
        t = Triangle((0, 0), (1, 0), (0, 1)).as_polygon()
        est, err = union_area_grid([t], (-0.2, -0.2, 1.2, 1.2), 2048)
        assert abs(est - 0.5) <= err

    def test_rejects_small_window(self):
        sq = ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        with pytest.raises(ValueError):
            union_area_grid([sq], (0.25, 0.25, 0.75, 0.75), 128)

    def test_rejects_coarse_grid(self):
        sq = ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        with pytest.raises(ValueError):
            union_area_grid([sq], (-1, -1, 2, 2), 32)

    def test_thread_count_stability(self, monkeypatch):
        polys = [rotated_square(2.0, 0.0), rotated_square(2.0, math.pi / 4)]
        res = []
        for threads in ("1", "4"):
            monkeypatch.setenv("PERRONLAB_THREADS", threads)
            res.append(union_area_grid(polys, (-2, -2, 2, 2), 512))
        assert res[0] == res[1]


class TestConvexSweep:
    def test_trapezoid(self):
        v = ConvexPolygon([(0, -0.5), (3, -0.5), (2, 0), (1, 0)])
        assert math.isclose(union_area_convex_sweep([v]), v.area, rel_tol=1e-12)

    def test_overlapping_boxes(self):
        a = ConvexPolygon([(0, 0), (2, 0), (2, 1), (0, 1)])
        b = ConvexPolygon([(1, 0.5), (3, 0.5), (3, 1.5), (1, 1.5)])
        assert math.isclose(union_area_convex_sweep([a, b]), 4.0 - 0.5, rel_tol=1e-12)

    def test_grid_concordance(self, rng):
        for _ in range(10):
            polys = [
                random_rect(rng).polygon().translate(rng.uniform(-1, 1, 2))
                for _ in range(int(rng.integers(2, 6)))
            ]
            got = union_area_convex_sweep(polys)
            est, err = union_area_grid(polys, (-4, -4, 4, 4), 1024)
            assert abs(got - est) <= err
