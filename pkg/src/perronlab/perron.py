"""Slope sequences, the Perron factor, and dyadic Perron-tree blocks.

A block takes the triangles with apex (0, 1) sitting over consecutive slope
intervals [b_{k-1}, b_k] for k in [2^n, 2^{n+1}) and runs n rounds of the
pair-and-slide construction.  Each round translates the right triangle of a
pair leftwards so that its right edge crosses the left edge of its partner
at a fraction alpha of the common height, replaces the pair by the similar
core triangle that crossing carves out, and re-abuts the cores so the next
round sees successively adjacent triangles again.  Only horizontal
translations ever touch the original triangles, so the final union is
measured exactly by the vertical interval sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geom_core import DEFAULT_TOL, Triangle, clip, paper_triangle
from .union_area import union_area_triangles


@dataclass(frozen=True)
class SlopeSequence:
    """Strictly increasing slopes b_0 = 0 < b_1 < b_2 < ..."""

    values: tuple[float, ...]
    generator: str = "explicit"

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if len(v) < 2:
            raise ValueError("need at least two slope values")
        if v[0] != 0.0:
            raise ValueError("slope sequence must start at 0")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("slope sequence must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def triangle(self, k: int) -> Triangle:
        """The k-th triangle: apex (0,1), base [b_{k-1}, b_k]."""
        if not 1 <= k < len(self.values):
            raise IndexError(f"triangle index {k} needs slopes up to b_{k}")
        return paper_triangle(self.values[k - 1], self.values[k])

    def triangles(self) -> list[Triangle]:
        return [self.triangle(k) for k in range(1, len(self.values))]

    def directions(self) -> list[float]:
        """Slopes -1/b_k of the segments from the apex to the base points."""
        return [-1.0 / b for b in self.values[1:]]


def slope_sequence(kind: str, count: int, s: float = 1.0, values=None) -> SlopeSequence:
    """Build a slope sequence: kind 'power' gives b_k = k^s, 'explicit' validates."""
    if kind == "power":
        if s <= 0:
            raise ValueError("power exponent must be positive")
        return SlopeSequence(tuple(float(k) ** s for k in range(count)), f"power:{s}")
    if kind == "explicit":
        if values is None:
            raise ValueError("explicit slope sequence needs values")
        return SlopeSequence(tuple(values), "explicit")
    raise ValueError(f"unknown slope generator {kind!r}")


@dataclass(frozen=True)
class PerronFactorEstimate:
    value: float
    n: int
    l: int


def perron_factor(b: SlopeSequence, n_max: int) -> PerronFactorEstimate:
    """Lower estimate of the Perron factor of b, with the maximizing pair.

    Enumerates (b_{n+2l}-b_{n+l})/(b_{n+l}-b_n) + its reciprocal over
    n <= n_max, 1 <= l <= max(1, n); the pair (0, 1) is included so the
    estimate covers the ratio of the first two increments as well.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if len(b) < 3 * n_max + 1:
        raise ValueError(f"need at least {3 * n_max + 1} slopes for n_max={n_max}")
    v = b.values
    best, best_n, best_l = -math.inf, 0, 1
    for n in range(n_max + 1):
        for l in range(1, max(1, n) + 1):
            num = v[n + 2 * l] - v[n + l]
            den = v[n + l] - v[n]
            term = num / den + den / num
            if term > best:
                best, best_n, best_l = term, n, l
    return PerronFactorEstimate(best, best_n, best_l)


def technical_constant(b: SlopeSequence, n_max: int) -> float:
    """min over 1 <= k <= n_max of (1 + b_{k-1}^2) / (b_k - b_{k-1})^2."""
    if not 1 <= n_max < len(b):
        raise ValueError("n_max out of range")
    v = b.values
    return min((1.0 + v[k - 1] ** 2) / (v[k] - v[k - 1]) ** 2 for k in range(1, n_max + 1))


def triangles(b: SlopeSequence) -> list[Triangle]:
    return b.triangles()


# ---------------------------------------------------------------------------
# The pair-and-slide step


def bisection_step(t1: Triangle, t2: Triangle, alpha: float, tol: float = DEFAULT_TOL):
    """Slide t2 left so its right edge meets t1's left edge at height alpha*h.

    t1 and t2 must be adjacent (t1's right base vertex is t2's left one) and
    share their apex; then with base lengths x, y the union of t1 and the
    shifted copy shrinks by exactly alpha^2 + (1-alpha)^2 (x/y + y/x).
    Returns (shift, predicted_factor); shift is the signed horizontal
    translation of t2 (negative means leftward).  alpha = 1 is the
    degenerate identity case.

    The identity requires the slide (1-alpha)(x+y) to stay within both base
    lengths, i.e. alpha >= max(x, y)/(x + y); below that the overlap stops
    being a single similar triangle and the true union drops under the
    formula, so such alphas are rejected.  Any alpha >= g/(1+g) with
    g = x/y + y/x is safe.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    (bl1, br1), apex1 = _base_and_apex(t1, tol)
    (bl2, br2), apex2 = _base_and_apex(t2, tol)
    scale = max(1.0, abs(br2), abs(bl1), abs(apex1[0]))
    if abs(br1 - bl2) > 1e-9 * scale:
        raise ValueError("triangles must be adjacent (shared base vertex)")
    if abs(apex1[0] - apex2[0]) > 1e-9 * scale or abs(apex1[1] - apex2[1]) > 1e-9 * scale:
        raise ValueError("triangles must share their apex")
    x = br1 - bl1
    y = br2 - bl2
    alpha_min = max(x, y) / (x + y)
    if alpha < alpha_min * (1.0 - 1e-12):
        raise ValueError(
            f"alpha {alpha!r} below the identity's validity floor "
            f"max(x,y)/(x+y) = {alpha_min!r}"
        )
    shift = -(1.0 - alpha) * (x + y)
    predicted = alpha * alpha + (1.0 - alpha) ** 2 * (x / y + y / x)
    if alpha < 1.0:
        measured = _pair_union_area(t1, t2.translate((shift, 0.0))) / (t1.area + t2.area)
        if abs(measured - predicted) > 1e-9 * max(1.0, predicted):
            raise RuntimeError(
                f"pair-and-slide identity violated: measured {measured!r}, "
                f"predicted {predicted!r}"
            )
    return shift, predicted


def _pair_union_area(t1: Triangle, t2: Triangle) -> float:
    inter = clip(t1.as_polygon(), t2.as_polygon())
    return t1.area + t2.area - (inter.area if inter is not None else 0.0)


def _base_and_apex(t: Triangle, tol: float):
    pts = [t.a, t.b, t.c]
    ys = sorted(p[1] for p in pts)
    base_y = ys[0]
    base = sorted(p[0] for p in pts if abs(p[1] - base_y) <= tol * max(1.0, abs(ys[-1])))
    apex = [p for p in pts if p[1] > base_y + tol]
    if len(base) != 2 or len(apex) != 1:
        raise ValueError("expected a triangle with a horizontal base")
    return (base[0], base[1]), apex[0]


# ---------------------------------------------------------------------------
# Alpha schedules


AlphaSchedule = Sequence[float] | float | Callable[[int, int], float] | None


def resolve_schedule(schedule: AlphaSchedule, n: int, g: float) -> tuple[float, ...]:
    """Per-level alphas for block n; None picks the default constant alpha.

    The default uses alpha_n = max(n/(n+1), g/(1+g)): the second term is the
    per-level optimum of alpha^2 + g (1-alpha)^2, the first pushes alpha
    toward 1 as blocks deepen so the measured area keeps dropping through
    the desk-scale range.
    """
    if n == 0:
        return ()
    if schedule is None:
        alpha = max(n / (n + 1.0), g / (1.0 + g))
        return (alpha,) * n
    if isinstance(schedule, (int, float)):
        return (float(schedule),) * n
    if callable(schedule):
        return tuple(float(schedule(m, n)) for m in range(n))
    sched = tuple(float(a) for a in schedule)
    if len(sched) != n:
        raise ValueError(f"schedule must provide {n} levels for block {n}")
    return sched


@dataclass(frozen=True)
class PerronBlock:
    """One dyadic block of translated triangles with its measured shrink."""

    n: int
    slopes: SlopeSequence
    translations: tuple[float, ...]  # tau_k for k in [2^n, 2^{n+1})
    alpha_schedule: tuple[float, ...]
    eps_measured: float
    eps_bound: float
    g_used: float
    level_max_ratios: tuple[float, ...]

    @property
    def k_range(self) -> range:
        return range(2**self.n, 2 ** (self.n + 1))

    def translation(self, k: int) -> float:
        return self.translations[k - 2**self.n]

    def original_triangles(self) -> list[Triangle]:
        return [self.slopes.triangle(k) for k in self.k_range]

    def translated_triangles(self) -> list[Triangle]:
        return [
            self.slopes.triangle(k).translate((self.translation(k), 0.0))
            for k in self.k_range
        ]


def build_block(
    b: SlopeSequence,
    n: int,
    schedule: AlphaSchedule = None,
    g_estimate: float | None = None,
) -> PerronBlock:
    """Run n pair-and-slide rounds on the n-th dyadic block of triangles."""
    if n < 0:
        raise ValueError("block index must be nonnegative")
    need = 2 ** (n + 1)
    if len(b) < need:
        raise ValueError(f"block {n} needs {need} slopes, have {len(b)}")
    if g_estimate is None:
        n_cap = (len(b) - 1) // 3
        g_estimate = perron_factor(b, n_cap).value if n_cap >= 0 else 2.0
    alphas = resolve_schedule(schedule, n, g_estimate)

    ks = list(range(2**n, 2 ** (n + 1)))
    apex = (0.0, 1.0)
    clusters = [
        {"l": b[k - 1], "r": b[k], "apex": apex, "members": {k: 0.0}} for k in ks
    ]
    level_ratios = []
    for alpha in alphas:
        merged = []
        ratio = 0.0
        for i in range(0, len(clusters) - 1, 2):
            c1, c2 = clusters[i], clusters[i + 1]
            t1 = Triangle(c1["apex"], (c1["l"], 0.0), (c1["r"], 0.0))
            t2 = Triangle(c2["apex"], (c2["l"], 0.0), (c2["r"], 0.0))
            shift, _ = bisection_step(t1, t2, alpha)
            x = c1["r"] - c1["l"]
            y = c2["r"] - c2["l"]
            ratio = max(ratio, x / y + y / x)
            members = dict(c1["members"])
            for k, tau in c2["members"].items():
                members[k] = tau + shift
            ax, ah = c1["apex"]
            merged.append(
                {
                    "l": c1["l"],
                    "r": c1["l"] + alpha * (c2["r"] - c1["l"]),
                    "apex": (c1["l"] + alpha * (ax - c1["l"]), alpha * ah),
                    "members": members,
                }
            )
        if len(clusters) % 2:
            merged.append(clusters[-1])
        # re-abut: slide every cluster so the cores are successively adjacent
        for j in range(1, len(merged)):
            t = merged[j - 1]["r"] - merged[j]["l"]
            merged[j]["l"] += t
            merged[j]["r"] += t
            ax, ah = merged[j]["apex"]
            merged[j]["apex"] = (ax + t, ah)
            merged[j]["members"] = {k: tau + t for k, tau in merged[j]["members"].items()}
        clusters = merged
        level_ratios.append(ratio)

    members: dict[int, float] = {}
    for c in clusters:
        members.update(c["members"])
    taus = tuple(members[k] for k in ks)

    originals = [b.triangle(k) for k in ks]
    translated = [t.translate((tau, 0.0)) for t, tau in zip(originals, taus)]
    denom = union_area_triangles(originals)
    eps_measured = union_area_triangles(translated) / denom

    g_used = max([g_estimate] + level_ratios)
    eps_bound = _analytic_bound(alphas, g_used, n)
    return PerronBlock(
        n=n,
        slopes=b,
        translations=taus,
        alpha_schedule=alphas,
        eps_measured=eps_measured,
        eps_bound=eps_bound,
        g_used=g_used,
        level_max_ratios=tuple(level_ratios),
    )


def _analytic_bound(alphas: tuple[float, ...], g: float, n: int) -> float:
    """Classical Perron-tree bound on the area shrink factor.

    Constant schedules get the closed form alpha^(2n) + g (1-alpha)/(1+alpha);
    general schedules get the accumulated product form (each level leaves the
    core at prod alpha^2 of the original area and spills at most
    g (1-alpha)^2 times the current core area into excess triangles).
    """
    if n == 0 or not alphas:
        return 1.0
    if all(a == alphas[0] for a in alphas):
        a = alphas[0]
        if a >= 1.0:
            return 1.0
        return a ** (2 * n) + g * (1.0 - a) / (1.0 + a)
    core = 1.0
    excess = 0.0
    for a in alphas:
        excess += g * (1.0 - a) ** 2 * core
        core *= a * a
    return min(1.0, core + excess)


# ---------------------------------------------------------------------------
# SVG rendering hook


def block_svg(block: PerronBlock, width_px: float = 900.0) -> str:
    """Serialize the translated triangles of a block as an SVG 1.1 drawing."""
    tris = block.translated_triangles()
    pts = np.vstack([t.vertices for t in tris])
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    pad = 0.03 * max(x1 - x0, y1 - y0, 1e-9)
    x0, y0, x1, y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad
    scale = width_px / (x1 - x0)
    height_px = (y1 - y0) * scale

    def fmt(v: float) -> str:
        return format(v, ".6f")

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{fmt(width_px)}" height="{fmt(height_px)}" '
        f'viewBox="0 0 {fmt(width_px)} {fmt(height_px)}">',
        f"<!-- perron block n={block.n} eps_measured={block.eps_measured:.12g} "
        f"eps_bound={block.eps_bound:.12g} -->",
    ]
    for t in tris:
        coords = " ".join(
            f"{fmt((px - x0) * scale)},{fmt((y1 - py) * scale)}" for px, py in t.vertices
        )
        lines.append(
            f'<polygon points="{coords}" fill="#3b82f6" fill-opacity="0.35" '
            f'stroke="#1e3a8a" stroke-width="0.6"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
