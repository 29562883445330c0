import math

import numpy as np
import pytest

from perronlab.geom_core import Triangle, clip_area
from perronlab.perron import slope_sequence, technical_constant
from perronlab.process_builder import (
    assemble_process,
    block_kits,
    companion_rect,
    verify_intersection_bound,
)


class TestCompanionRect:
    def test_right_triangle_kit(self):
        kit = companion_rect(Triangle((0, 1), (0, 0), (1, 0)))
        # b = 0: the nominal and true rectangles coincide, a 1.5 x 1.5 square
        assert math.isclose(kit.p_rect.area, 2.25, rel_tol=1e-12)
        assert math.isclose(kit.p_nominal_area, 2.25, rel_tol=1e-12)
        assert math.isclose(kit.v_trap.area, 0.625, rel_tol=1e-12)
        assert math.isclose(kit.alpha_loc, 1.0, rel_tol=1e-12)

    def test_nominal_area_identity(self, rng):
        for _ in range(100):
            b = rng.uniform(0.0, 4.0)
            c = b + rng.uniform(0.05, 3.0)
            kit = companion_rect(Triangle((0, 1), (b, 0), (c, 0)))
            assert math.isclose(kit.p_nominal_area, 4.5 * kit.delta.area, rel_tol=1e-12)
            assert math.isclose(kit.v_trap.area, 1.25 * kit.delta.area, rel_tol=1e-12)
            # the true rectangle area carries the (1+bc)/(1+b^2) overhang
            assert kit.p_rect.area >= kit.p_nominal_area - 1e-12

    def test_width_formula(self):
        kit = companion_rect(Triangle((0, 1), (1, 0), (2, 0)))
        assert math.isclose(kit.p_rect.width, 1.5 / math.sqrt(2.0), rel_tol=1e-12)

    def test_rejects_bad_apex(self):
        with pytest.raises(ValueError):
            companion_rect(Triangle((0.5, 1), (0, 0), (1, 0)))
        with pytest.raises(ValueError):
            companion_rect(Triangle((0, 1), (-1, 0), (1, 0)))

    def test_alpha_cap(self):
        kit = companion_rect(Triangle((0, 1), (3, 0), (3.25, 0)), alpha_cap=1.0)
        assert kit.alpha_loc == 1.0


class TestIntersectionBound:
    @pytest.mark.parametrize("b", [0.0, 0.5, 1.0, 3.0])
    @pytest.mark.parametrize("off", [0.25, 1.0, 2.0])
    def test_bound_holds(self, b, off):
        kit = companion_rect(Triangle((0, 1), (b, 0), (b + off, 0)))
        rep = verify_intersection_bound(kit, samples=500, seed=11)
        assert rep.min_ratio >= rep.bound - 1e-9
        assert math.isclose(rep.c_prime_ratio, 1.0 / 72.0, abs_tol=1e-9)
        assert rep.b_prime_ratio >= min(kit.alpha_loc, 1.0) / 72.0 - 1e-9

    def test_translation_invariance(self):
        kit = companion_rect(Triangle((0, 1), (1, 0), (2, 0)))
        pc = kit.p_rect.corners()
        tri = kit.delta.vertices
        x = np.array(kit.c_prime)
        shift = np.array([3.7, -1.2])
        a0 = clip_area(pc + x, tri)
        a1 = clip_area(pc + x + shift, tri + shift)
        assert math.isclose(a0, a1, rel_tol=1e-12)

    def test_rejects_few_samples(self):
        kit = companion_rect(Triangle((0, 1), (0, 0), (1, 0)))
        with pytest.raises(ValueError):
            verify_intersection_bound(kit, samples=10)

    def test_alpha_floor_from_technical_constant(self):
        # kits built over a slope prefix satisfy alpha_k >= sqrt(c*)
        for s in (0.5, 1.0, 2.0):
            b = slope_sequence("power", 70, s)
            c_star = technical_constant(b, 60)
            for n in (1, 2, 3):
                for kit in block_kits(b, n):
                    assert kit.alpha_loc >= math.sqrt(c_star) - 1e-12


class TestAssembleProcess:
    def test_power_with_decaying_delta(self):
        b = slope_sequence("power", 16, 1.0)
        proc = assemble_process(b, [4.0**-n for n in range(4)], threshold=1.0)
        assert proc.admissible
        assert len(proc) == 15
        # indexing law: R_k = delta_n P_k on block n
        kit5 = companion_rect(b.triangle(5))
        assert math.isclose(proc.rect(5).area, (4.0**-2) ** 2 * kit5.p_rect.area, rel_tol=1e-12)

    def test_constant_delta_not_admissible(self):
        b = slope_sequence("power", 16, 1.0)
        proc = assemble_process(b, [1.0] * 4, threshold=1.0)
        assert not proc.admissible

    def test_single_block_vacuous(self):
        proc = assemble_process(slope_sequence("power", 4, 1.0), [1.0], threshold=10.0)
        assert proc.admissible
        assert "vacuous" in proc.note

    def test_rejects_short_delta(self):
        with pytest.raises(ValueError):
            assemble_process(slope_sequence("power", 16, 1.0), [1.0], threshold=1.0, n_blocks=3)

    def test_sequence_view(self):
        proc = assemble_process(slope_sequence("power", 16, 1.0), [4.0**-n for n in range(3)], 1.0)
        seq = proc.sequence()
        assert len(seq) == 7
        assert seq.decay_witness == 0.0
