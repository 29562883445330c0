"""Exact primitives for centered rotated rectangles and convex polygons.

All coordinates are double precision; the containment and degeneracy tests
take an absolute tolerance (default 1e-9), which is orders of magnitude below
every constant the experiments care about.  Everything here is a pure
function on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9
MERGE_TOL = 1e-12


def _as_points(pts) -> np.ndarray:
    a = np.asarray(pts, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Rect:
    """Rectangle centered at the origin.

    ``half_length`` runs along the long axis, ``half_width`` across it, and
    ``angle`` is the rotation of the long axis from the horizontal.  The
    constructor canonicalizes so that half_length >= half_width and
    angle lies in (-pi/2, pi/2].  Positioned copies are represented
    externally as (translation, Rect) pairs; the rectangle itself never
    moves off the origin.
    """

    half_length: float
    half_width: float
    angle: float = 0.0

    def __post_init__(self):
        hl = float(self.half_length)
        hw = float(self.half_width)
        th = float(self.angle)
        if not (math.isfinite(hl) and math.isfinite(hw) and math.isfinite(th)):
            raise ValueError("rectangle parameters must be finite")
        if hl <= 0 or hw <= 0:
            raise ValueError(f"rectangle sides must be positive, got {hl}, {hw}")
        if hl < hw:
            hl, hw = hw, hl
            th += 0.5 * math.pi
        th = th % math.pi
        if th > 0.5 * math.pi:
            th -= math.pi
        object.__setattr__(self, "half_length", hl)
        object.__setattr__(self, "half_width", hw)
        object.__setattr__(self, "angle", th)

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @property
    def width(self) -> float:
        return 2.0 * self.half_width

    @property
    def area(self) -> float:
        return 4.0 * self.half_length * self.half_width

    @property
    def diameter(self) -> float:
        return 2.0 * math.hypot(self.half_length, self.half_width)

    @property
    def perimeter(self) -> float:
        return 4.0 * (self.half_length + self.half_width)

    @property
    def long_axis(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    @property
    def short_axis(self) -> np.ndarray:
        return np.array([-math.sin(self.angle), math.cos(self.angle)])

    def corners(self) -> np.ndarray:
        """Vertices in counterclockwise order, shape (4, 2)."""
        u = self.long_axis * self.half_length
        w = self.short_axis * self.half_width
        return np.array([u + w, -u + w, -u - w, u - w])

    def polygon(self) -> "ConvexPolygon":
        return ConvexPolygon(self.corners())

    def scaled(self, s: float) -> "Rect":
        if s <= 0:
            raise ValueError("scale factor must be positive")
        return Rect(self.half_length * s, self.half_width * s, self.angle)

    def contains_point(self, p, tol: float = DEFAULT_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        return (
            abs(float(p @ self.long_axis)) <= self.half_length + tol
            and abs(float(p @ self.short_axis)) <= self.half_width + tol
        )

    def axis_extents(self) -> tuple[float, float]:
        """Half extents of the axis-aligned bounding box."""
        c, s = abs(math.cos(self.angle)), abs(math.sin(self.angle))
        return (
            self.half_length * c + self.half_width * s,
            self.half_length * s + self.half_width * c,
        )


class ConvexPolygon:
    """Strictly convex polygon, counterclockwise vertex list.

    The constructor drops duplicate vertices, fixes orientation and merges
    collinear triples, then checks strict convexity.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        v = _as_points(vertices)
        scale = max(1.0, float(np.max(np.abs(v))))
        # drop consecutive (near-)duplicates, including last == first
        keep = [0]
        for i in range(1, len(v)):
            if np.max(np.abs(v[i] - v[keep[-1]])) > MERGE_TOL * scale:
                keep.append(i)
        while len(keep) > 1 and np.max(np.abs(v[keep[-1]] - v[keep[0]])) <= MERGE_TOL * scale:
            keep.pop()
        v = v[keep]
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 distinct vertices")
        if _signed_area(v) < 0:
            v = v[::-1]
        v = _merge_collinear(v, MERGE_TOL * scale * scale)
        if len(v) < 3:
            raise ValueError("polygon degenerates after collinear merge")
        cr = _turn_crosses(v)
        if np.any(cr <= 0):
            raise ValueError("vertex list is not convex")
        v.setflags(write=False)
        self.vertices = v

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        d = np.diff(np.vstack([self.vertices, self.vertices[:1]]), axis=0)
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))

    def bounds(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 1].min()),
            float(v[:, 0].max()),
            float(v[:, 1].max()),
        )

    def translate(self, t) -> "ConvexPolygon":
        t = np.asarray(t, dtype=float)
        return ConvexPolygon(self.vertices + t)

    def scaled(self, s: float) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices * float(s))

    def contains_point(self, p, tol: float = DEFAULT_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        r = p[None, :] - v
        cr = e[:, 0] * r[:, 1] - e[:, 1] * r[:, 0]
        scale = max(1.0, float(np.max(np.abs(v))))
        return bool(np.all(cr >= -tol * scale))

    def __repr__(self):
        return f"ConvexPolygon({len(self.vertices)} vertices, area={self.area:.6g})"


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _turn_crosses(v: np.ndarray) -> np.ndarray:
    a = np.roll(v, -1, axis=0) - v
    b = np.roll(a, -1, axis=0)
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def _merge_collinear(v: np.ndarray, tol_cross: float) -> np.ndarray:
    changed = True
    v = v.copy()
    while changed and len(v) > 3:
        cr = _turn_crosses(v)
        # cr[i] is the turn at vertex i+1
        flat = np.nonzero(cr <= tol_cross)[0]
        if len(flat) == 0:
            changed = False
        else:
            drop = (flat[0] + 1) % len(v)
            v = np.delete(v, drop, axis=0)
    if len(v) == 3:
        return v
    return v


@dataclass(frozen=True)
class Triangle:
    """Triangle given by three vertices (tuples, so the value is hashable)."""

    a: tuple[float, float]
    b: tuple[float, float]
    c: tuple[float, float]

    def __post_init__(self):
        a, b, c = (tuple(map(float, p)) for p in (self.a, self.b, self.c))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if self.area <= 0.0:
            # reorder clockwise inputs instead of rejecting them
            if _tri_signed_area(a, c, b) > 0:
                object.__setattr__(self, "b", c)
                object.__setattr__(self, "c", b)
            else:
                raise ValueError("degenerate triangle")

    @property
    def area(self) -> float:
        return _tri_signed_area(self.a, self.b, self.c)

    @property
    def vertices(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def as_polygon(self) -> ConvexPolygon:
        return ConvexPolygon(self.vertices)

    def translate(self, t) -> "Triangle":
        tx, ty = float(t[0]), float(t[1])
        return Triangle(
            (self.a[0] + tx, self.a[1] + ty),
            (self.b[0] + tx, self.b[1] + ty),
            (self.c[0] + tx, self.c[1] + ty),
        )


def _tri_signed_area(a, b, c) -> float:
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def paper_triangle(b_prev: float, b_next: float) -> Triangle:
    """Triangle with apex (0, 1) and base [b_prev, b_next] on the axis."""
    if not b_next > b_prev:
        raise ValueError("base must have positive length")
    return Triangle((0.0, 1.0), (b_prev, 0.0), (b_next, 0.0))


# ---------------------------------------------------------------------------
# Minkowski sums and difference sets


def minkowski_sum(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon:
    """Minkowski sum of two convex polygons by the linear edge merge."""
    a, b = p.vertices, q.vertices
    n, m = len(a), len(b)
    ia = _lowest_index(a)
    ib = _lowest_index(b)
    out = []
    i = j = 0
    while i < n or j < m:
        out.append(a[(ia + i) % n] + b[(ib + j) % m])
        ea = a[(ia + i + 1) % n] - a[(ia + i) % n]
        eb = b[(ib + j + 1) % m] - b[(ib + j) % m]
        cr = ea[0] * eb[1] - ea[1] * eb[0]
        if j >= m or (i < n and cr > 0):
            i += 1
        elif i >= n or cr < 0:
            j += 1
        else:
            i += 1
            j += 1
    return ConvexPolygon(out)


def _lowest_index(v: np.ndarray) -> int:
    return int(np.lexsort((v[:, 0], v[:, 1]))[0])


def difference_set(r: Rect, r2: Rect) -> ConvexPolygon:
    """The set r - r2 = {p - q : p in r, q in r2} as a convex polygon.

    Both rectangles are centrally symmetric about the origin, so r - r2
    equals the Minkowski sum r (+) r2: a centrally symmetric polygon with at
    most 8 vertices containing the origin in its interior.
    """
    return minkowski_sum(r.polygon(), r2.polygon())


def bounding_rect_hat(r: Rect, r2: Rect, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Closed-form sides of the smallest axis-parallel box around r - r2.

    Requires r itself to be axis-parallel; the relative angle is r2.angle.
    Returns full side lengths (L_hat, l_hat).
    """
    if abs(r.angle) > tol:
        raise ValueError("first rectangle must be axis-parallel")
    w = r2.angle
    big_l, ell = r.length, r.width
    big_lp, ellp = r2.length, r2.width
    l_hat = big_l + big_lp * abs(math.cos(w)) + ellp * abs(math.sin(w))
    e_hat = ell + big_lp * abs(math.sin(w)) + ellp * abs(math.cos(w))
    return l_hat, e_hat


def area_lower_bound(r: Rect, r2: Rect, omega: float | None = None) -> float:
    """max(l L' |cos w|, L L' |sin w|), a guaranteed lower bound on |r - r2|."""
    w = (r2.angle - r.angle) if omega is None else float(omega)
    return max(
        r.width * r2.length * abs(math.cos(w)),
        r.length * r2.length * abs(math.sin(w)),
    )


def scaled_contains(r: Rect, alpha: float, p: ConvexPolygon, tol: float = DEFAULT_TOL) -> bool:
    """True iff every vertex of p lies in alpha * r (sufficient by convexity)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    v = p.vertices
    lo = np.abs(v @ r.long_axis) / r.half_length
    sh = np.abs(v @ r.short_axis) / r.half_width
    return bool(np.all(np.maximum(lo, sh) <= alpha + tol))


# ---------------------------------------------------------------------------
# Clipping


def clip(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon | None:
    """Exact intersection of two convex polygons; None when empty."""
    subject = [tuple(v) for v in p.vertices]
    qv = q.vertices
    scale = max(
        1.0, float(np.max(np.abs(p.vertices))), float(np.max(np.abs(qv)))
    )
    eps = MERGE_TOL * scale
    for k in range(len(qv)):
        if not subject:
            return None
        x1, y1 = qv[k]
        x2, y2 = qv[(k + 1) % len(qv)]
        ex, ey = x2 - x1, y2 - y1
        elen = math.hypot(ex, ey)
        out = []
        prev = subject[-1]
        prev_d = (ex * (prev[1] - y1) - ey * (prev[0] - x1)) / elen
        for cur in subject:
            cur_d = (ex * (cur[1] - y1) - ey * (cur[0] - x1)) / elen
            if cur_d >= -eps:
                if prev_d < -eps:
                    out.append(_edge_cross(prev, cur, prev_d, cur_d))
                out.append(cur)
            elif prev_d >= -eps:
                out.append(_edge_cross(prev, cur, prev_d, cur_d))
            prev, prev_d = cur, cur_d
        subject = out
    if len(subject) < 3:
        return None
    try:
        result = ConvexPolygon(subject)
    except ValueError:
        return None
    if result.area <= (MERGE_TOL * scale) ** 2:
        return None
    return result


def _edge_cross(p, c, dp, dc):
    t = dp / (dp - dc)
    return (p[0] + t * (c[0] - p[0]), p[1] + t * (c[1] - p[1]))


def clip_area(subject, clipper) -> float:
    """Intersection area of two convex vertex lists (no polygon objects).

    Hot-path variant of ``clip`` for sampling loops: plain Sutherland-Hodgman
    on raw CCW vertex sequences, returning only the shoelace area.
    """
    pts = [(float(x), float(y)) for x, y in subject]
    cv = [(float(x), float(y)) for x, y in clipper]
    for k in range(len(cv)):
        if not pts:
            return 0.0
        x1, y1 = cv[k]
        x2, y2 = cv[(k + 1) % len(cv)]
        ex, ey = x2 - x1, y2 - y1
        out = []
        px, py = pts[-1]
        pd = ex * (py - y1) - ey * (px - x1)
        for cx, cy in pts:
            cd = ex * (cy - y1) - ey * (cx - x1)
            if cd >= 0.0:
                if pd < 0.0:
                    t = pd / (pd - cd)
                    out.append((px + t * (cx - px), py + t * (cy - py)))
                out.append((cx, cy))
            elif pd >= 0.0:
                t = pd / (pd - cd)
                out.append((px + t * (cx - px), py + t * (cy - py)))
            px, py, pd = cx, cy, cd
        pts = out
    if len(pts) < 3:
        return 0.0
    s = 0.0
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        s += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return 0.5 * s


def area(p: ConvexPolygon) -> float:
    """Shoelace area of a convex polygon."""
    return p.area
