"""Companion rectangles, trapezia, and assembly of rectangle processes.

For a triangle with apex A = (0,1) and base [b, c] on the axis, stretch the
two slanted sides by 3/2 to get B' and C'.  The companion rectangle P is the
smallest rectangle with a side along the line AB' that contains the triangle
AB'C' (recentred at the origin): width (3/2)(c-b)/sqrt(1+b^2) and side
length (3/2)(1+bc)/sqrt(1+b^2).  For b > 0 that side is strictly longer
than |AB'| because C' projects past B' along the AB direction; the shorter
|AB'| x width rectangle cannot contain the triangle, and translating it to
C' would miss the base corner entirely.

The intersection bound is stated against the nominal area
|AB'| * width = (9/4)(c-b) = (9/2)|triangle|: for every x in the trapezium
V = hull(B, C, C', B'),

    |(x+P) cap triangle| >= min(alpha, 1)/72 * (9/4)(c-b),

with alpha = |AB|/|BC|, and the translate x = C' attains exactly 1/72 (the
quarter-homothety corner triangle).  ``verify_intersection_bound`` checks
this by exact clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correct_factors import RectSequence
from .geom_core import DEFAULT_TOL, ConvexPolygon, Rect, Triangle, clip_area
from .perron import SlopeSequence


@dataclass(frozen=True)
class TriangleKit:
    """A triangle with its companion rectangle and trapezium.

    ``p_nominal_area`` = (9/4)(c-b) is the normalizer of the /72 bounds; the
    true rectangle area exceeds it by the factor (1+bc)/(1+b^2).
    """

    delta: Triangle
    p_rect: Rect  # centered at the origin
    v_trap: ConvexPolygon
    alpha_loc: float
    p_nominal_area: float

    @property
    def bound(self) -> float:
        return min(self.alpha_loc, 1.0) / 72.0

    @property
    def threshold_factor(self) -> float:
        """Rigorous floor of the rectangle average on V: bound * nominal/|P|."""
        return self.bound * self.p_nominal_area / self.p_rect.area

    @property
    def b_prime(self) -> tuple[float, float]:
        b = self.delta.b[0]
        return (1.5 * b, -0.5)

    @property
    def c_prime(self) -> tuple[float, float]:
        c = self.delta.c[0]
        return (1.5 * c, -0.5)


def companion_rect(t: Triangle, alpha_cap: float | None = None, tol: float = DEFAULT_TOL) -> TriangleKit:
    """Build the companion rectangle and trapezium of an apex-(0,1) triangle."""
    ax, ay = t.a
    if abs(ax) > tol or abs(ay - 1.0) > tol:
        raise ValueError("triangle apex must be (0, 1)")
    if abs(t.b[1]) > tol or abs(t.c[1]) > tol:
        raise ValueError("triangle base must lie on the axis")
    b, c = t.b[0], t.c[0]
    if b > c:
        b, c = c, b
    if b < -tol or not c - b > tol:
        raise ValueError("base must satisfy 0 <= b < c")

    ab = math.hypot(b, 1.0)
    side = 1.5 * (1.0 + b * c) / ab  # covers the projection of C' onto line AB'
    width = 1.5 * (c - b) / ab
    angle = math.atan2(-1.0, b)  # direction of A -> B
    p_rect = Rect(side / 2.0, width / 2.0, angle)

    bp = (1.5 * b, -0.5)
    cp = (1.5 * c, -0.5)
    v_trap = ConvexPolygon([bp, cp, (c, 0.0), (b, 0.0)])

    alpha_loc = ab / (c - b)
    if alpha_cap is not None:
        alpha_loc = min(alpha_loc, alpha_cap)

    nominal = 2.25 * (c - b)  # |AB'| * width = (9/2)|triangle|
    expected_v = 1.25 * t.area
    if abs(v_trap.area - expected_v) > 1e-12 * max(1.0, expected_v):
        raise RuntimeError("trapezium area identity |V| = (5/4)|triangle| violated")
    return TriangleKit(t, p_rect, v_trap, alpha_loc, nominal)


@dataclass(frozen=True)
class RectProcess:
    """The process R_k = delta_n P_k for 2^n <= k < 2^{n+1}."""

    b: SlopeSequence
    delta: tuple[float, ...]
    rects: tuple[Rect, ...]  # R_1, R_2, ... (index 0 holds R_1)
    admissible: bool
    note: str = ""

    def rect(self, k: int) -> Rect:
        if k < 1:
            raise IndexError("process indices start at 1")
        return self.rects[k - 1]

    def __len__(self) -> int:
        return len(self.rects)

    def sequence(self) -> RectSequence:
        """View as a RectSequence (stored prefix is the whole object)."""
        return RectSequence(self.rects, source="perron process",
                            decay_witness=0.0, tail_mode="witness")


def assemble_process(
    b: SlopeSequence,
    delta: list[float],
    threshold: float,
    n_blocks: int | None = None,
) -> RectProcess:
    """Build R(b, delta) over the first n_blocks dyadic blocks.

    The admissibility flag is the finite surrogate of diam R_k -> 0: block
    maxima must eventually decrease and the last one must drop below the
    threshold.  A single stored block cannot witness decay, so it reports
    admissible with a warning note.
    """
    if n_blocks is None:
        n_blocks = len(delta)
    if n_blocks < 1:
        raise ValueError("need at least one block")
    if len(delta) < n_blocks:
        raise ValueError(f"delta too short: need {n_blocks} block scales")
    if any(d <= 0 for d in delta[:n_blocks]):
        raise ValueError("delta values must be positive")
    if len(b) < 2**n_blocks:
        raise ValueError(f"need {2 ** n_blocks} slopes for {n_blocks} blocks")

    rects = []
    block_max_diam = [0.0] * n_blocks
    for k in range(1, 2**n_blocks):
        n = k.bit_length() - 1
        kit = companion_rect(b.triangle(k))
        r = kit.p_rect.scaled(delta[n])
        rects.append(r)
        block_max_diam[n] = max(block_max_diam[n], r.diameter)

    note = ""
    if n_blocks == 1:
        admissible = block_max_diam[0] < threshold
        note = "single block: admissibility is vacuous"
    else:
        tail_ok = all(
            block_max_diam[i + 1] <= block_max_diam[i] * (1.0 + DEFAULT_TOL)
            for i in range(max(0, n_blocks - 3), n_blocks - 1)
        )
        admissible = tail_ok and block_max_diam[-1] < threshold
    return RectProcess(b, tuple(delta[:n_blocks]), tuple(rects), admissible, note)


@dataclass(frozen=True)
class IntersectionReport:
    min_ratio: float
    bound: float
    argmin: tuple[float, float]
    samples: int
    c_prime_ratio: float
    b_prime_ratio: float


def verify_intersection_bound(
    kit: TriangleKit, samples: int = 10_000, seed: int = 0, tol: float = DEFAULT_TOL
) -> IntersectionReport:
    """Check |(x+P) cap triangle| >= min(alpha,1)/72 * (9/4)(c-b) over x in V.

    Draws uniform points in the trapezium (plus the two corners B' and C',
    where the minimum lives) and clips exactly; ratios are taken against the
    nominal area.  Raises if any sampled ratio dips below the bound.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    p_corners = kit.p_rect.corners()
    p_area = kit.p_nominal_area
    tri = kit.delta.vertices

    pts = [np.array(kit.b_prime), np.array(kit.c_prime)]
    pts.extend(_uniform_in_trapezium(kit.v_trap, samples, seed))

    min_ratio = math.inf
    argmin = (math.nan, math.nan)
    special = []
    for i, x in enumerate(pts):
        ratio = clip_area(p_corners + x, tri) / p_area
        if i < 2:
            special.append(ratio)
        if ratio < min_ratio:
            min_ratio = ratio
            argmin = (float(x[0]), float(x[1]))
    bound = kit.bound
    if min_ratio < bound - tol:
        raise RuntimeError(
            f"intersection bound violated: min ratio {min_ratio!r} < {bound!r} at {argmin}"
        )
    return IntersectionReport(
        min_ratio, bound, argmin, len(pts), c_prime_ratio=special[1], b_prime_ratio=special[0]
    )


def _uniform_in_trapezium(v: ConvexPolygon, count: int, seed: int) -> np.ndarray:
    """Uniform samples in a convex quadrilateral via its two-triangle fan."""
    verts = v.vertices
    if len(verts) == 3:
        tris = [(verts[0], verts[1], verts[2])]
    else:
        tris = [(verts[0], verts[1], verts[2]), (verts[0], verts[2], verts[3])]
    areas = np.array([abs(_cross(t[1] - t[0], t[2] - t[0])) / 2.0 for t in tris])
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(tris), size=count, p=areas / areas.sum())
    u = rng.random(count)
    w = rng.random(count)
    flip = u + w > 1.0
    u[flip] = 1.0 - u[flip]
    w[flip] = 1.0 - w[flip]
    out = np.empty((count, 2))
    for i, t in enumerate(tris):
        m = pick == i
        a, b2, c2 = t
        out[m] = a + np.outer(u[m], b2 - a) + np.outer(w[m], c2 - a)
    return out


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def block_kits(b: SlopeSequence, n: int, alpha_cap: float | None = None) -> list[TriangleKit]:
    """Companion kits of every triangle in the n-th dyadic block."""
    return [companion_rect(b.triangle(k), alpha_cap) for k in range(2**n, 2 ** (n + 1))]
