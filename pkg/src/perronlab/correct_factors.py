"""Correct factors, nesting verdicts, and the greedy chain decomposition.

The k-th correct factor of a rectangle sequence is the area of the union of
the difference sets R_k - R_l over l >= k.  On a stored finite prefix we can
only compute a truncation, so every query returns an interval [q_lo, q_hi]:
q_lo is the exact union over the stored tail, q_hi adds a conservative
disk-inflation bound for the unstored rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geom_core import DEFAULT_TOL, Rect, difference_set
from .union_area import union_area_star


class TailUnboundedError(ValueError):
    """The stored prefix gives no bound on the unstored tail rectangles."""


@dataclass(frozen=True)
class RectSequence:
    """Finite prefix of a rectangle sequence, with tail metadata.

    ``decay_witness`` is a declared upper bound on diam(R_l) for every
    rectangle beyond the stored prefix; ``tail_mode`` says how to treat that
    tail: "witness" (use the declared bound), "repeat_last" (the sequence
    keeps repeating rectangles already stored, so the tail adds nothing to
    any difference-set union), or "none" (nothing is known).
    """

    rects: tuple[Rect, ...]
    source: str = ""
    decay_witness: float | None = None
    tail_mode: str = "witness"

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(self.rects))
        if len(self.rects) == 0:
            raise ValueError("empty rectangle sequence")
        if self.tail_mode not in ("witness", "repeat_last", "none"):
            raise ValueError(f"unknown tail_mode {self.tail_mode!r}")
        if self.tail_mode == "witness" and self.decay_witness is not None:
            if not (self.decay_witness >= 0):
                raise ValueError("decay witness must be nonnegative")

    def __len__(self) -> int:
        return len(self.rects)

    def __getitem__(self, k: int) -> Rect:
        return self.rects[k]

    @property
    def diams(self) -> np.ndarray:
        return np.array([r.diameter for r in self.rects])

    def key(self) -> tuple:
        """Hashable fingerprint (used to cache rasterized kernels)."""
        return tuple((r.half_length, r.half_width, r.angle) for r in self.rects)


def nested_similar_sequence(
    half_length: float = 1.0,
    half_width: float = 0.5,
    ratio: float = 0.5,
    count: int = 12,
    angle: float = 0.0,
) -> RectSequence:
    """R_l = ratio^l * R_0, all parallel: the model almost-nested family."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    rects = [
        Rect(half_length * ratio**l, half_width * ratio**l, angle) for l in range(count)
    ]
    witness = rects[-1].diameter * ratio
    return RectSequence(tuple(rects), source=f"nested-similar ratio={ratio}",
                        decay_witness=witness, tail_mode="witness")


def constant_sequence(
    half_length: float = 1.0, half_width: float = 0.5, angle: float = 0.0, count: int = 8
) -> RectSequence:
    """R_l = R for every l; the tail repeats the stored rectangle."""
    rects = (Rect(half_length, half_width, angle),) * count
    return RectSequence(rects, source="constant", tail_mode="repeat_last")


@dataclass(frozen=True)
class TailPolicy:
    """Truncation policy: union difference sets up to index l_max (inclusive)."""

    l_max: int | None = None


class CorrectFactor(NamedTuple):
    q_lo: float
    q_hi: float


def correct_factor(seq: RectSequence, k: int, tail: TailPolicy | None = None) -> CorrectFactor:
    """Bracket [q_lo, q_hi] for the k-th correct factor of the sequence.

    q_lo is the exact (sweep) area of the union of R_k - R_l over the stored
    l in [k, l_max].  Rectangles beyond l_max satisfy
    R_k - R_l <= R_k (+) Disk(d_max), and the part of that inflation not
    already covered by R_k - R_k is added to obtain q_hi.
    """
    if not 0 <= k < len(seq):
        raise IndexError(f"index {k} out of range")
    l_max = len(seq) - 1 if tail is None or tail.l_max is None else tail.l_max
    if not k <= l_max < len(seq):
        raise ValueError(f"l_max={l_max} must lie in [{k}, {len(seq) - 1}]")

    polys = [difference_set(seq[k], seq[l]) for l in range(k, l_max + 1)]
    q_lo = union_area_star(polys)

    half_diams = [seq[l].diameter / 2.0 for l in range(l_max + 1, len(seq))]
    if seq.tail_mode == "repeat_last":
        # the unstored tail duplicates stored rectangles, so only stored
        # summands past l_max can still be missing from the union
        d_max = max(half_diams, default=0.0)
    elif seq.tail_mode == "witness":
        if half_diams:
            d_max = max(half_diams)
            if seq.decay_witness is not None:
                d_max = max(d_max, seq.decay_witness / 2.0)
        elif seq.decay_witness is not None:
            d_max = seq.decay_witness / 2.0
        else:
            raise TailUnboundedError(
                "prefix exhausted and no decay witness declared: tail unbounded"
            )
    else:  # "none"
        if half_diams:
            d_max = max(half_diams)
        else:
            raise TailUnboundedError("tail_mode='none': tail unbounded")

    q_hi = q_lo + _tail_inflation(seq[k], d_max)
    return CorrectFactor(q_lo, q_hi)


def _tail_inflation(r: Rect, d: float) -> float:
    """Area the disk-inflated rectangle may add beyond R - R.

    |R (+) D(d)| - |R (+) D(min(d, lw))| with lw the half width; zero as soon
    as the tail diameters drop below the width of R (the inflation then sits
    inside R - R = 2R, which the union already contains).
    """
    if d <= 0.0:
        return 0.0
    d0 = min(d, r.half_width)
    return max(0.0, _disk_inflated_area(r, d) - _disk_inflated_area(r, d0))


def _disk_inflated_area(r: Rect, d: float) -> float:
    return r.area + r.perimeter * d + math.pi * d * d


def lp_correct_factor(q: float, rect_area: float, p: float) -> float:
    """W_{k,p} = Q_k^(1/p) |R_k|^(1/p'); reduces to Q_k at p = 1."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if q <= 0 or rect_area <= 0:
        raise ValueError("q and rect_area must be positive")
    if p == 1:
        return q
    return q ** (1.0 / p) * rect_area ** (1.0 - 1.0 / p)


def min_nesting_alpha(r_k: Rect, r_l: Rect) -> float:
    """Least alpha with r_k - r_l contained in alpha * r_k.

    The difference set is the hull of the 16 corner sums, and the frame
    ratio is convex, so the max over corner sums equals the max over the
    hull; no Minkowski construction is needed.
    """
    v = (r_k.corners()[:, None, :] + r_l.corners()[None, :, :]).reshape(-1, 2)
    lo = np.abs(v @ r_k.long_axis) / r_k.half_length
    sh = np.abs(v @ r_k.short_axis) / r_k.half_width
    return float(np.max(np.maximum(lo, sh)))


@dataclass(frozen=True)
class NestingReport:
    alpha_star: float | None
    pair: tuple[int, int] | None
    horizon: int
    note: str = ""


def almost_nested_alpha(seq: RectSequence, horizon: int | None = None) -> NestingReport:
    """Max of min_nesting_alpha over pairs k <= l <= horizon.

    The diagonal pair l = k contributes exactly 2 (R - R = 2R) and is
    included because the correct-factor union starts at l = k; without it the
    bound Q_k <= alpha*^2 |R_k| would fail on nested families.
    """
    h = len(seq) - 1 if horizon is None else horizon
    if not 0 <= h < len(seq):
        raise ValueError("horizon out of range")
    if h < 1:
        return NestingReport(None, None, h, note="no pairs")
    best = 2.0
    pair = (0, 0)
    for k in range(h):
        for l in range(k + 1, h + 1):
            a = min_nesting_alpha(seq[k], seq[l])
            if a > best:
                best, pair = a, (k, l)
    return NestingReport(best, pair, h)


@dataclass(frozen=True)
class GrowthVerdict:
    kind: str  # "LINEAR" | "UNBOUNDED"
    constant: float | None
    witness_k: int | None
    witness_ratio: float | None
    horizon: int


def linear_growth_constant(
    seq: RectSequence,
    horizon: int | None = None,
    tail: TailPolicy | None = None,
    cap: float | None = None,
) -> GrowthVerdict:
    """C = max_k q_hi(k) / |R_k| over the prefix, or an UNBOUNDED witness.

    A finite prefix cannot certify an infinite supremum, so UNBOUNDED is
    reported when some ratio exceeds the caller's cap (the witness pair says
    where).
    """
    h = len(seq) - 1 if horizon is None else horizon
    if not 0 <= h < len(seq):
        raise ValueError("horizon out of range")
    best = -math.inf
    best_k = 0
    for k in range(h + 1):
        q = correct_factor(seq, k, tail)
        ratio = q.q_hi / seq[k].area
        if ratio > best:
            best, best_k = ratio, k
    if cap is not None and best > cap:
        return GrowthVerdict("UNBOUNDED", None, best_k, best, h)
    return GrowthVerdict("LINEAR", best, None, None, h)


@dataclass(frozen=True)
class LemmaLinearReport:
    """Quantitative two-way bounds between linear growth and nesting."""

    alpha_star: float
    constant_lo: float
    constant_hi: float
    alpha_bound_ok: bool  # alpha* <= C + 2
    union_bound_ok: bool  # q_lo(k) <= alpha*^2 |R_k| for all k
    horizon: int


def lemma_linear_check(
    seq: RectSequence,
    horizon: int | None = None,
    tail: TailPolicy | None = None,
    tol: float = DEFAULT_TOL,
) -> LemmaLinearReport:
    h = len(seq) - 1 if horizon is None else horizon
    nesting = almost_nested_alpha(seq, h)
    alpha_star = nesting.alpha_star if nesting.alpha_star is not None else 2.0
    c_lo = -math.inf
    c_hi = -math.inf
    union_ok = True
    for k in range(h + 1):
        q = correct_factor(seq, k, tail)
        area_k = seq[k].area
        c_lo = max(c_lo, q.q_lo / area_k)
        c_hi = max(c_hi, q.q_hi / area_k)
        if q.q_lo > alpha_star**2 * area_k * (1.0 + tol) + tol:
            union_ok = False
    alpha_ok = alpha_star <= c_lo + 2.0 + tol
    return LemmaLinearReport(alpha_star, c_lo, c_hi, alpha_ok, union_ok, h)


def decompose_almost_nested(seq: RectSequence, alpha: float) -> list[list[int]]:
    """First-fit greedy decomposition into alpha-nested chains.

    Heuristic only: rectangles are processed in order and placed into the
    first chain whose every earlier member R_j satisfies
    min_nesting_alpha(R_j, R_k) <= alpha; otherwise a new chain opens.  The
    chain count may exceed the optimum.
    """
    for r in seq.rects:
        if abs(r.angle) > DEFAULT_TOL and abs(abs(r.angle) - math.pi / 2) > DEFAULT_TOL:
            raise ValueError("greedy decomposition expects axis-parallel rectangles")
    chains: list[list[int]] = []
    for k in range(len(seq)):
        placed = False
        for chain in chains:
            if all(min_nesting_alpha(seq[j], seq[k]) <= alpha + DEFAULT_TOL for j in chain):
                chain.append(k)
                placed = True
                break
        if not placed:
            chains.append([k])
    return chains
