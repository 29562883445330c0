"""Union areas for the two polygon families the experiments need.

Two exact event sweeps plus a pixel-counting oracle:

* ``union_area_star`` integrates the radial function of a union of convex
  polygons that all contain the origin (the correct-factor summands).
* ``union_area_triangles`` / ``union_area_convex_sweep`` run a vertical sweep
  over interval slices with linear endpoints (Perron triangles, trapezia).
* ``union_area_grid`` brackets any polygon union by counting cell centers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geom_core import DEFAULT_TOL, ConvexPolygon, Triangle
from .runtime import worker_count

EVENT_MERGE = 1e-12


def _merge_close(values: np.ndarray, gap: float) -> np.ndarray:
    """Sort and collapse values closer than ``gap`` to a single event."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        return v
    keep = np.empty(len(v), dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(v) > gap
    return v[keep]


# ---------------------------------------------------------------------------
# Star-shaped union (radial sweep)


def union_area_star(polys: list[ConvexPolygon], tol: float = DEFAULT_TOL) -> float:
    """Area of a union of convex polygons that each contain the origin.

    The union is star-shaped about 0, so its boundary distance is the max of
    the member radial functions.  Between consecutive events (vertex angles
    and pairwise boundary crossings) the winning polygon and its supporting
    edge are constant, and the swept wedge is an exact triangle.
    """
    if not polys:
        return 0.0
    normals, offsets, starts, all_verts = _star_edge_arrays(polys, tol)

    angles = [np.arctan2(v[:, 1], v[:, 0]) for v in all_verts]
    events = [np.concatenate(angles)]
    cross_pts = _pairwise_edge_crossings(all_verts)
    if len(cross_pts):
        events.append(np.arctan2(cross_pts[:, 1], cross_pts[:, 0]))
    ev = _merge_close(np.concatenate(events), EVENT_MERGE)
    if len(ev) == 0:
        raise ValueError("no sweep events")
    ev = np.append(ev, ev[0] + 2.0 * math.pi)

    rho_ev = _radial_all(normals, offsets, starts, ev)
    mid = 0.5 * (ev[:-1] + ev[1:])
    rho_mid = _radial_all(normals, offsets, starts, mid)
    winner = np.argmax(rho_mid, axis=0)

    idx = np.arange(len(mid))
    ra = rho_ev[winner, idx]
    rb = rho_ev[winner, idx + 1]
    ax, ay = ra * np.cos(ev[:-1]), ra * np.sin(ev[:-1])
    bx, by = rb * np.cos(ev[1:]), rb * np.sin(ev[1:])
    return float(0.5 * np.sum(ax * by - ay * bx))


def _star_edge_arrays(polys, tol):
    normals, offsets, starts, verts = [], [], [0], []
    for i, p in enumerate(polys):
        v = p.vertices
        scale = max(1.0, float(np.max(np.abs(v))))
        e = np.roll(v, -1, axis=0) - v
        # outward normal of a CCW edge
        n = np.stack([e[:, 1], -e[:, 0]], axis=1)
        n /= np.hypot(n[:, 0], n[:, 1])[:, None]
        c = np.einsum("ij,ij->i", n, v)
        if np.any(c <= tol * scale):
            raise ValueError(f"polygon {i} does not strictly contain the origin")
        normals.append(n)
        offsets.append(c)
        starts.append(starts[-1] + len(v))
        verts.append(v)
    return np.vstack(normals), np.concatenate(offsets), np.array(starts[:-1]), verts


def _radial_all(normals, offsets, starts, phis):
    """Radial distance of every polygon boundary at every angle, (P, M)."""
    u = np.stack([np.cos(phis), np.sin(phis)], axis=0)  # (2, M)
    den = normals @ u  # (E, M)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = offsets[:, None] / den
    r[den <= 1e-15] = np.inf
    return np.minimum.reduceat(r, starts, axis=0)


def _pairwise_edge_crossings(verts_per_poly) -> np.ndarray:
    """Intersection points of boundary segments of distinct polygons."""
    segs_a, segs_b, owner = [], [], []
    for i, v in enumerate(verts_per_poly):
        segs_a.append(v)
        segs_b.append(np.roll(v, -1, axis=0))
        owner.append(np.full(len(v), i))
    a = np.vstack(segs_a)
    b = np.vstack(segs_b)
    own = np.concatenate(owner)
    d = b - a
    ii, jj = np.meshgrid(np.arange(len(a)), np.arange(len(a)), indexing="ij")
    mask = (ii < jj) & (own[ii] != own[jj])
    ii, jj = ii[mask], jj[mask]
    if len(ii) == 0:
        return np.empty((0, 2))
    det = d[ii, 0] * d[jj, 1] - d[ii, 1] * d[jj, 0]
    ok = np.abs(det) > 1e-15
    ii, jj, det = ii[ok], jj[ok], det[ok]
    rel = a[jj] - a[ii]
    t = (rel[:, 0] * d[jj, 1] - rel[:, 1] * d[jj, 0]) / det
    s = (rel[:, 0] * d[ii, 1] - rel[:, 1] * d[ii, 0]) / det
    hit = (t >= -1e-12) & (t <= 1 + 1e-12) & (s >= -1e-12) & (s <= 1 + 1e-12)
    return a[ii[hit]] + t[hit, None] * d[ii[hit]]


# ---------------------------------------------------------------------------
# Vertical interval sweeps


def _interval_union_lengths(lefts: np.ndarray, rights: np.ndarray) -> np.ndarray:
    """Union length of K intervals at each of H heights; inputs (H, K)."""
    order = np.argsort(lefts, axis=1, kind="stable")
    ls = np.take_along_axis(lefts, order, axis=1)
    rs = np.take_along_axis(rights, order, axis=1)
    run = np.maximum.accumulate(rs, axis=1)
    prev = np.empty_like(run)
    prev[:, 0] = -np.inf
    prev[:, 1:] = run[:, :-1]
    visible = np.maximum(0.0, rs - np.maximum(ls, prev))
    return np.sum(visible, axis=1)


def _band_union_area(a_l, b_l, a_r, b_r, v0: float, v1: float) -> float:
    """Exact union area over a band where slice endpoints are linear in v.

    Each member covers [a_l + b_l v, a_r + b_r v] at height v.  Event
    heights are the pairwise crossings of the endpoint lines; between them
    the union length is linear, so trapezoid sums are exact.
    """
    if v1 - v0 <= EVENT_MERGE:
        return 0.0
    a = np.concatenate([a_l, a_r])
    b = np.concatenate([b_l, b_r])
    ii, jj = np.triu_indices(len(a), k=1)
    db = b[ii] - b[jj]
    nz = np.abs(db) > 1e-15
    vstar = (a[jj][nz] - a[ii][nz]) / db[nz]
    inside = vstar[(vstar > v0 + EVENT_MERGE) & (vstar < v1 - EVENT_MERGE)]
    heights = _merge_close(np.concatenate([[v0, v1], inside]), EVENT_MERGE)

    total = 0.0
    chunk = 4096
    for s in range(0, len(heights), chunk):
        h = heights[s : min(s + chunk + 1, len(heights))]
        lefts = a_l[None, :] + b_l[None, :] * h[:, None]
        rights = a_r[None, :] + b_r[None, :] * h[:, None]
        lens = _interval_union_lengths(lefts, np.maximum(lefts, rights))
        total += float(np.sum(0.5 * (lens[:-1] + lens[1:]) * np.diff(h)))
    return total


def union_area_triangles(ts: list[Triangle], tol: float = DEFAULT_TOL) -> float:
    """Exact union area of triangles with base on y=0 and apex at height 1."""
    if not ts:
        return 0.0
    a_l, b_l, a_r, b_r = [], [], [], []
    for t in ts:
        base, apex = _split_base_apex(t, tol)
        (xl, xr) = base
        a_l.append(xl)
        b_l.append(apex - xl)
        a_r.append(xr)
        b_r.append(apex - xr)
    return _band_union_area(
        np.array(a_l), np.array(b_l), np.array(a_r), np.array(b_r), 0.0, 1.0
    )


def _split_base_apex(t: Triangle, tol: float):
    pts = [t.a, t.b, t.c]
    base = sorted(p[0] for p in pts if abs(p[1]) <= tol)
    apex = [p[0] for p in pts if abs(p[1] - 1.0) <= tol]
    if len(base) != 2 or len(apex) != 1:
        raise ValueError(f"triangle must have its base on y=0 and apex at y=1: {t}")
    return (base[0], base[1]), apex[0]


def union_area_convex_sweep(polys: list[ConvexPolygon]) -> float:
    """Exact union area of arbitrary convex polygons by banded vertical sweep."""
    if not polys:
        return 0.0
    ys = _merge_close(
        np.concatenate([p.vertices[:, 1] for p in polys]), EVENT_MERGE
    )
    total = 0.0
    for v0, v1 in zip(ys[:-1], ys[1:]):
        if v1 - v0 <= EVENT_MERGE:
            continue
        vm = 0.5 * (v0 + v1)
        a_l, b_l, a_r, b_r = [], [], [], []
        for p in polys:
            sl0 = _slice_bounds(p, v0)
            sl1 = _slice_bounds(p, v1)
            if sl0 is None or sl1 is None:
                continue
            if _slice_bounds(p, vm) is None:
                continue
            scale = 1.0 / (v1 - v0)
            a_l.append((sl0[0] * v1 - sl1[0] * v0) * scale)
            b_l.append((sl1[0] - sl0[0]) * scale)
            a_r.append((sl0[1] * v1 - sl1[1] * v0) * scale)
            b_r.append((sl1[1] - sl0[1]) * scale)
        if a_l:
            total += _band_union_area(
                np.array(a_l), np.array(b_l), np.array(a_r), np.array(b_r), v0, v1
            )
    return total


def _slice_bounds(p: ConvexPolygon, y: float):
    v = p.vertices
    ymin, ymax = float(v[:, 1].min()), float(v[:, 1].max())
    pad = EVENT_MERGE * max(1.0, abs(ymin), abs(ymax))
    if y < ymin - pad or y > ymax + pad:
        return None
    xs = []
    n = len(v)
    for i in range(n):
        y1, y2 = v[i, 1], v[(i + 1) % n, 1]
        if abs(y1 - y) <= pad:
            xs.append(v[i, 0])
        if (y1 - y) * (y2 - y) < 0:
            t = (y - y1) / (y2 - y1)
            xs.append(v[i, 0] + t * (v[(i + 1) % n, 0] - v[i, 0]))
    if not xs:
        return None
    return min(xs), max(xs)


# ---------------------------------------------------------------------------
# Grid oracle


def union_area_grid(
    polys: list[ConvexPolygon],
    window: tuple[float, float, float, float],
    n: int,
    tol: float = DEFAULT_TOL,
) -> tuple[float, float]:
    """Pixel-counting estimate of a union area, with a bracketing error bar.

    Counts the n x n cell centers covered by any polygon.  Misclassified
    cells hug the union boundary, so ``estimate +- err`` brackets the true
    area with err = (total boundary length) * (cell diagonal).
    """
    if n < 64:
        raise ValueError("grid resolution must be at least 64")
    x0, y0, x1, y1 = map(float, window)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("empty window")
    for p in polys:
        bx0, by0, bx1, by1 = p.bounds()
        if bx0 < x0 - tol or by0 < y0 - tol or bx1 > x1 + tol or by1 > y1 + tol:
            raise ValueError("window does not contain every polygon")

    dx = (x1 - x0) / n
    dy = (y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * dx
    edges = []
    for p in polys:
        v = p.vertices
        e = np.roll(v, -1, axis=0) - v
        edges.append((v, e))

    def count_rows(r0: int, r1: int) -> int:
        ys = y0 + (np.arange(r0, r1) + 0.5) * dy
        gx = xs[None, :, None]
        gy = ys[:, None, None]
        covered = np.zeros((len(ys), n), dtype=bool)
        for v, e in edges:
            cr = e[None, None, :, 0] * (gy - v[None, None, :, 1]) - e[
                None, None, :, 1
            ] * (gx - v[None, None, :, 0])
            covered |= np.all(cr >= 0.0, axis=2)
        return int(np.count_nonzero(covered))

    workers = worker_count()
    rows_per = max(16, n // (4 * workers))
    ranges = [(r, min(r + rows_per, n)) for r in range(0, n, rows_per)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            counts = list(ex.map(lambda rr: count_rows(*rr), ranges))
    else:
        counts = [count_rows(*rr) for rr in ranges]
    total = sum(counts)  # integer counts: bit-stable across thread counts

    estimate = total * dx * dy
    err = sum(p.perimeter for p in polys) * math.hypot(dx, dy)
    return estimate, err
