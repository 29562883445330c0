import math

import numpy as np
import pytest

from perronlab.correct_factors import (
    RectSequence,
    TailPolicy,
    TailUnboundedError,
    almost_nested_alpha,
    constant_sequence,
    correct_factor,
    decompose_almost_nested,
    lemma_linear_check,
    linear_growth_constant,
    lp_correct_factor,
    min_nesting_alpha,
    nested_similar_sequence,
)
from perronlab.geom_core import Rect, difference_set
from perronlab.union_area import union_area_grid

from conftest import random_rect


def random_sequence(rng, max_len=40) -> RectSequence:
    """Random rectangles with non-increasing diameters, finite-tail semantics."""
    count = int(rng.integers(2, max_len + 1))
    scales = np.sort(rng.uniform(0.05, 1.0, count))[::-1]
    rects = []
    for s in scales:
        shape = rng.uniform(0.2, 1.0)
        rects.append(Rect(s, s * shape, rng.uniform(-math.pi / 2, math.pi / 2)))
    return RectSequence(tuple(rects), source="random", decay_witness=0.0)


class TestCorrectFactor:
    def test_nested_similar_is_four_areas(self):
        seq = nested_similar_sequence(1.0, 0.5, 0.5, count=24)
        for k in (0, 3, 10, 20):
            q = correct_factor(seq, k)
            assert math.isclose(q.q_lo, 4.0 * seq[k].area, rel_tol=1e-9)
            assert math.isclose(q.q_hi, 4.0 * seq[k].area, rel_tol=1e-9)

    def test_constant_sequence(self):
        seq = constant_sequence(1.0, 0.5, 0.0, count=6)
        q = correct_factor(seq, 2)
        assert math.isclose(q.q_lo, 8.0, rel_tol=1e-9)
        assert math.isclose(q.q_hi, 8.0, rel_tol=1e-9)

    def test_two_term_toy_union(self):
        seq = RectSequence(
            (Rect(1.0, 0.5, 0.0), Rect(1.0, 0.5, math.pi / 2)),
            decay_witness=0.0,
        )
        q = correct_factor(seq, 0)
        # union of [-2,2]x[-1,1] and [-1.5,1.5]^2: 8 + 9 - 6 overlap
        assert math.isclose(q.q_lo, 11.0, rel_tol=1e-9)
        polys = [difference_set(seq[0], seq[l]) for l in range(2)]
        est, err = union_area_grid(polys, (-3, -3, 3, 3), 4096)
        assert abs(q.q_lo - est) <= err

    def test_tail_unbounded_without_witness(self):
        seq = RectSequence((Rect(1, 0.5, 0.0),) * 3, tail_mode="none")
        with pytest.raises(TailUnboundedError):
            correct_factor(seq, 2)
        # but a truncated policy with stored rectangles beyond l_max is fine
        q = correct_factor(seq, 0, TailPolicy(l_max=1))
        assert q.q_hi >= q.q_lo

    def test_q_lo_at_least_four_areas(self, rng):
        for _ in range(25):
            seq = random_sequence(rng, max_len=12)
            for k in range(len(seq)):
                q = correct_factor(seq, k)
                assert q.q_lo >= 4.0 * seq[k].area * (1 - 1e-9)

    def test_dominates_area_lower_bound(self, rng):
        from perronlab.geom_core import area_lower_bound

        for _ in range(10):
            seq = random_sequence(rng, max_len=10)
            for k in range(len(seq)):
                q = correct_factor(seq, k)
                for l in range(k, len(seq)):
                    lb = area_lower_bound(seq[k], seq[l], seq[l].angle - seq[k].angle)
                    assert q.q_lo >= lb - 1e-9

    def test_scaling_covariance(self, rng):
        seq = random_sequence(rng, max_len=10)
        for delta in (0.5, 2.0):
            scaled = RectSequence(
                tuple(r.scaled(delta) for r in seq.rects), decay_witness=0.0
            )
            for k in range(len(seq)):
                q = correct_factor(seq, k)
                qs = correct_factor(scaled, k)
                assert math.isclose(qs.q_lo, delta * delta * q.q_lo, rel_tol=1e-9)
            c = linear_growth_constant(seq)
            cs = linear_growth_constant(scaled)
            assert math.isclose(c.constant, cs.constant, rel_tol=1e-9)


class TestLpCorrectFactor:
    def test_p_one_is_q(self):
        assert lp_correct_factor(7.3, 2.0, 1.0) == 7.3

    def test_p_two(self):
        assert math.isclose(lp_correct_factor(4.0, 1.0, 2.0), 2.0)

    def test_large_p_limit(self):
        q, area = 4.0 * 2.5, 2.5  # Q = C|R| with C = 4
        w = lp_correct_factor(q, area, 100.0)
        assert abs(w - area) / area < 0.05

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            lp_correct_factor(1.0, 1.0, 0.5)


class TestMinNestingAlpha:
    def test_self_is_two(self):
        r = Rect(1.3, 0.4, 0.7)
        assert math.isclose(min_nesting_alpha(r, r), 2.0, rel_tol=1e-12)

    def test_cross_square_is_three(self):
        a = min_nesting_alpha(Rect(1.0, 0.5, 0.0), Rect(1.0, 0.5, math.pi / 2))
        assert math.isclose(a, 3.0, rel_tol=1e-12)

    def test_tiny_second_rect(self):
        r = Rect(1.0, 0.5, 0.3)
        eps = 1e-3
        tiny = Rect(eps * 0.25, eps * 0.1, 1.0)
        a = min_nesting_alpha(r, tiny)
        assert 1.0 <= a <= 1.0 + 2 * eps

    def test_binary_search_agreement(self, rng):
        from perronlab.geom_core import scaled_contains

        for _ in range(30):
            r1, r2 = random_rect(rng), random_rect(rng)
            d = difference_set(r1, r2)
            a = min_nesting_alpha(r1, r2)
            assert scaled_contains(r1, a, d)
            assert not scaled_contains(r1, a * (1 - 1e-6), d)


class TestVerdicts:
    def test_nested_alpha_star(self):
        seq = nested_similar_sequence(1.0, 0.5, 0.5, count=12)
        rep = almost_nested_alpha(seq)
        assert math.isclose(rep.alpha_star, 2.0, abs_tol=1e-9)

    def test_single_rect_no_pairs(self):
        seq = RectSequence((Rect(1, 0.5, 0),), decay_witness=0.0)
        rep = almost_nested_alpha(seq)
        assert rep.alpha_star is None
        assert rep.note == "no pairs"

    def test_linear_constant_nested(self):
        seq = nested_similar_sequence(1.0, 0.5, 0.5, count=24)
        v = linear_growth_constant(seq, horizon=20)
        assert v.kind == "LINEAR"
        assert math.isclose(v.constant, 4.0, rel_tol=1e-9)

    def test_linear_constant_constant_family(self):
        v = linear_growth_constant(constant_sequence(count=8))
        assert v.kind == "LINEAR"
        assert math.isclose(v.constant, 4.0, rel_tol=1e-9)

    def test_unbounded_with_cap(self):
        from perronlab.maximal import lpgood_family

        seq, _ = lpgood_family([2.0**-k for k in range(12)], 10)
        v = linear_growth_constant(seq, cap=100.0)
        assert v.kind == "UNBOUNDED"
        assert v.witness_ratio > 100.0

    def test_lemma_linear_on_families(self):
        seq = nested_similar_sequence(1.0, 0.5, 0.5, count=24)
        rep = lemma_linear_check(seq, horizon=20)
        assert rep.alpha_bound_ok and rep.union_bound_ok
        assert math.isclose(rep.constant_lo, 4.0, rel_tol=1e-9)
        assert rep.alpha_star <= rep.constant_lo + 2.0 + 1e-9

    def test_lemma_linear_randomized(self, rng):
        for _ in range(60):
            rep = lemma_linear_check(random_sequence(rng, max_len=14))
            assert rep.alpha_bound_ok
            assert rep.union_bound_ok


class TestDecompose:
    def test_nested_single_chain(self):
        seq = nested_similar_sequence(1.0, 0.5, 0.5, count=10)
        assert len(decompose_almost_nested(seq, 2.0)) == 1

    def test_interleaved_two_chains(self):
        a = [Rect(2.0 * 0.5**k, 1.0 * 0.5**k, 0.0) for k in range(6)]
        b = [Rect(0.9 * 0.5**k, 0.05 * 0.5**k, 0.0) for k in range(6)]
        rects = [r for pair in zip(a, b) for r in pair]
        seq = RectSequence(tuple(rects), decay_witness=0.0)
        chains = decompose_almost_nested(seq, 2.5)
        assert len(chains) <= 2

    def test_rejects_rotated(self):
        seq = RectSequence((Rect(1, 0.5, 0.3),) * 2, decay_witness=0.0)
        with pytest.raises(ValueError):
            decompose_almost_nested(seq, 2.0)

    def test_lpgood_chain_growth(self):
        from perronlab.maximal import lpgood_family

        counts = []
        for blocks in (4, 8, 12):
            seq, _ = lpgood_family([2.0**-k for k in range(blocks + 2)], blocks)
            counts.append(len(decompose_almost_nested(seq, 4.0)))
        assert counts == sorted(counts)
        assert counts[-1] >= 12 / 4
