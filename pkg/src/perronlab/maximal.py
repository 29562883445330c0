"""Rasterized maximal operators and the blow-up / weak-type experiments.

Fields live on uniform (possibly anisotropic) grids.  Averages over
translated rectangles are computed by FFT convolution against supersampled
rectangle kernels, normalized by the kernel's own raster mass so that the
maximal field of an indicator never exceeds 1.  Windows are always dilated
by the rectangles' axis extents before convolving, so no integral is ever
silently truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .correct_factors import RectSequence, TailPolicy, correct_factor, lp_correct_factor
from .geom_core import DEFAULT_TOL, ConvexPolygon, Rect, clip, clip_area, difference_set
from .perron import (
    SlopeSequence,
    build_block,
    perron_factor,
    technical_constant,
)
from .process_builder import block_kits
from .runtime import worker_count
from .union_area import union_area_convex_sweep, union_area_triangles


class HypothesisError(RuntimeError):
    """An experiment's hypothesis check failed; refuse to run."""


class ExperimentError(RuntimeError):
    """A soundness assertion failed while running an experiment."""


class ResolutionError(ValueError):
    """Grid too coarse to resolve a rectangle kernel."""


# ---------------------------------------------------------------------------
# Raster fields


@dataclass
class RasterField:
    """Cell-averaged scalar field on a uniform grid over a window."""

    window: tuple[float, float, float, float]
    values: np.ndarray  # shape (n_rows, n_cols), row i spans y0 + i*dy ...
    err_hint: float = 0.0  # heuristic per-cell value tolerance

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def dx(self) -> float:
        return (self.window[2] - self.window[0]) / self.n_cols

    @property
    def dy(self) -> float:
        return (self.window[3] - self.window[1]) / self.n_rows

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def mass(self) -> float:
        return float(self.values.sum()) * self.cell_area

    def norm_p(self, p: float) -> float:
        """(integral of |f|^p)^(1/p) on this grid."""
        return float(np.sum(np.abs(self.values) ** p) * self.cell_area) ** (1.0 / p)


def _grid_shape(resolution) -> tuple[int, int]:
    if isinstance(resolution, int):
        return resolution, resolution
    rows, cols = resolution
    return int(rows), int(cols)


def rasterize(polys, window, resolution, supersample: int = 4) -> RasterField:
    """Cell coverage fractions of a union of convex polygons.

    Supersamples each cell on a supersample x supersample point lattice; a
    point counts when it lies in any polygon.  Rows are painted from the
    exact interval each convex polygon covers at the row's height.
    """
    x0, y0, x1, y1 = map(float, window)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("empty window")
    n_rows, n_cols = _grid_shape(resolution)
    for p in polys:
        bx0, by0, bx1, by1 = p.bounds()
        pad = DEFAULT_TOL * max(1.0, abs(bx0), abs(bx1), abs(by0), abs(by1))
        if bx0 < x0 - pad or by0 < y0 - pad or bx1 > x1 + pad or by1 > y1 + pad:
            raise ValueError("window does not contain every polygon")

    ss = supersample
    sub_cols = n_cols * ss
    dxs = (x1 - x0) / sub_cols
    dys = (y1 - y0) / (n_rows * ss)
    values = np.zeros((n_rows, n_cols))
    edges = [_poly_edges(p) for p in polys]

    row_chunk = max(1, (1 << 22) // (sub_cols + 1))  # chunk subrows for memory
    row_chunk -= row_chunk % ss or ss
    row_chunk = max(ss, row_chunk)
    for sub0 in range(0, n_rows * ss, row_chunk):
        sub1 = min(sub0 + row_chunk, n_rows * ss)
        ys = y0 + (np.arange(sub0, sub1) + 0.5) * dys
        delta = np.zeros((len(ys), sub_cols + 1), dtype=np.int32)
        for ev in edges:
            left, right = _slice_intervals(ev, ys)
            ok = ~np.isnan(left)
            if not np.any(ok):
                continue
            i0 = np.ceil((left[ok] - x0) / dxs - 0.5).astype(np.int64)
            i1 = np.floor((right[ok] - x0) / dxs - 0.5).astype(np.int64)
            i0 = np.clip(i0, 0, sub_cols)
            i1 = np.clip(i1, -1, sub_cols - 1)
            rows_idx = np.nonzero(ok)[0]
            keep = i1 >= i0
            np.add.at(delta, (rows_idx[keep], i0[keep]), 1)
            np.add.at(delta, (rows_idx[keep], i1[keep] + 1), -1)
        covered = np.cumsum(delta[:, :-1], axis=1) > 0
        frac = covered.reshape(len(ys) // ss, ss, n_cols, ss).sum(axis=(1, 3))
        values[sub0 // ss : sub1 // ss] = frac / (ss * ss)

    perim = sum(p.perimeter for p in polys)
    err_hint = perim * math.hypot(dxs, dys) / max(x1 - x0, y1 - y0)
    return RasterField((x0, y0, x1, y1), values, err_hint)


def _poly_edges(p: ConvexPolygon):
    v = p.vertices
    return v, np.roll(v, -1, axis=0)


def _slice_intervals(edges, ys: np.ndarray):
    """Interval [left, right] covered by a convex polygon at each height."""
    a, b = edges
    left = np.full(len(ys), np.nan)
    right = np.full(len(ys), np.nan)
    for (x1, y1), (x2, y2) in zip(a, b):
        if y1 == y2:
            continue
        t = (ys - y1) / (y2 - y1)
        m = (t >= 0.0) & (t <= 1.0)
        xs = x1 + t[m] * (x2 - x1)
        cur_l = left[m]
        cur_r = right[m]
        left[m] = np.where(np.isnan(cur_l), xs, np.minimum(cur_l, xs))
        right[m] = np.where(np.isnan(cur_r), xs, np.maximum(cur_r, xs))
    return left, right


# ---------------------------------------------------------------------------
# Rectangle kernels and max-convolution


def _check_kernel_resolution(rect: Rect, dx: float, dy: float, supersample: int):
    """Reject grids whose sampling pitch across the thin axis is too coarse."""
    pitch = (abs(math.sin(rect.angle)) * dx + abs(math.cos(rect.angle)) * dy) / supersample
    if pitch > rect.width / 4.0:
        need = pitch / (rect.width / 4.0)
        raise ResolutionError(
            f"cells too coarse for rectangle of width {rect.width:.3g} at angle "
            f"{rect.angle:.3f}: thin-axis sampling pitch {pitch:.3g} exceeds a "
            f"quarter width; raise the resolution by >= {need:.1f}x"
        )


def _kernel_raster(rect: Rect, dx: float, dy: float, supersample: int) -> np.ndarray:
    wx, wy = rect.axis_extents()
    hx = int(math.ceil(wx / dx)) + 1
    hy = int(math.ceil(wy / dy)) + 1
    window = (-(hx + 0.5) * dx, -(hy + 0.5) * dy, (hx + 0.5) * dx, (hy + 0.5) * dy)
    field = rasterize([rect.polygon()], window, (2 * hy + 1, 2 * hx + 1), supersample)
    return field.values


_KERNEL_CACHE: dict[tuple, tuple[np.ndarray, float]] = {}


def _kernel_for(rect: Rect, dx: float, dy: float, supersample: int):
    key = (rect.half_length, rect.half_width, rect.angle, dx, dy, supersample)
    hit = _KERNEL_CACHE.get(key)
    if hit is None:
        k = _kernel_raster(rect, dx, dy, supersample)
        hit = (k, float(k.sum()))
        if len(_KERNEL_CACHE) > 512:
            _KERNEL_CACHE.clear()
        _KERNEL_CACHE[key] = hit
    return hit


def _multi_max_conv(
    field: RasterField,
    rects: list[Rect],
    weight_sets: list[list[float]],
    supersample: int = 4,
) -> list[RasterField]:
    """Pointwise max over k of w_k * integral of f over x + rect_k.

    The integral is the kernel-mass-normalized discrete convolution times
    the exact |rect_k|, so full overlap of an indicator gives exactly 1
    before weighting.  The output window is the input dilated by the largest
    rectangle extents (integrals never truncate).  Several weight sets share
    one FFT pass; one output field per set.
    """
    if not rects:
        raise ValueError("need at least one rectangle")
    dx, dy = field.dx, field.dy
    for r in rects:
        _check_kernel_resolution(r, dx, dy, supersample)

    pad_x = max(int(math.ceil(r.axis_extents()[0] / dx)) + 2 for r in rects)
    pad_y = max(int(math.ceil(r.axis_extents()[1] / dy)) + 2 for r in rects)
    big = np.zeros((field.n_rows + 2 * pad_y, field.n_cols + 2 * pad_x))
    big[pad_y : pad_y + field.n_rows, pad_x : pad_x + field.n_cols] = field.values
    x0 = field.window[0] - pad_x * dx
    y0 = field.window[1] - pad_y * dy
    window = (x0, y0, x0 + big.shape[1] * dx, y0 + big.shape[0] * dy)

    kernels = [_kernel_for(r, dx, dy, supersample) for r in rects]
    wk = worker_count()
    sh = (
        sfft.next_fast_len(big.shape[0] + max(k.shape[0] for k, _ in kernels) - 1),
        sfft.next_fast_len(big.shape[1] + max(k.shape[1] for k, _ in kernels) - 1),
    )
    f_hat = sfft.rfft2(big, s=sh, workers=wk)
    outs: list[np.ndarray | None] = [None] * len(weight_sets)
    mass_err = 0.0
    for j, ((kern, mass), rect) in enumerate(zip(kernels, rects)):
        k_hat = sfft.rfft2(kern, s=sh, workers=wk)
        full = sfft.irfft2(f_hat * k_hat, s=sh, workers=wk)
        oy = (kern.shape[0] - 1) // 2
        ox = (kern.shape[1] - 1) // 2
        same = full[oy : oy + big.shape[0], ox : ox + big.shape[1]]
        for i, weights in enumerate(weight_sets):
            contrib = same * (weights[j] * rect.area / mass)
            outs[i] = contrib if outs[i] is None else np.maximum(outs[i], contrib)
        mass_err = max(mass_err, abs(mass * field.cell_area - rect.area) / rect.area)
    err = mass_err + field.err_hint
    fields = []
    for out in outs:
        np.maximum(out, 0.0, out=out)
        fields.append(RasterField(window, out, err))
    return fields


def _max_conv_field(field, rects, weights, supersample: int = 4) -> RasterField:
    return _multi_max_conv(field, rects, [list(weights)], supersample)[0]


def maximal_field(
    k_field: RasterField, rects: list[Rect], out_resolution: int | None = None
) -> RasterField:
    """T* f at cell centers: max over k of the average of f over x + R_k."""
    f = _max_conv_field(k_field, rects, [1.0 / r.area for r in rects])
    if out_resolution is not None and _grid_shape(out_resolution) != (
        f.n_rows,
        f.n_cols,
    ):
        f = _resample_nearest(f, _grid_shape(out_resolution))
    return f


def _resample_nearest(field: RasterField, shape: tuple[int, int]) -> RasterField:
    rows, cols = shape
    ri = np.minimum((np.arange(rows) + 0.5) * field.n_rows // rows, field.n_rows - 1)
    ci = np.minimum((np.arange(cols) + 0.5) * field.n_cols // cols, field.n_cols - 1)
    return RasterField(field.window, field.values[np.ix_(ri.astype(int), ci.astype(int))], field.err_hint)


# ---------------------------------------------------------------------------
# Superlevel measures


def superlevel_measure(
    field: RasterField, lam: float, strict: bool = True
) -> tuple[float, float]:
    """Measure of {f > lam} (or >= lam), with a boundary-cell error bar."""
    v = field.values
    above = v > lam if strict else v >= lam
    measure = float(np.count_nonzero(above)) * field.cell_area

    near = np.abs(v - lam) <= field.err_hint
    mixed = np.zeros_like(above)
    for sh in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        rolled = np.roll(above, sh, axis=(0, 1))
        mixed |= rolled != above
    boundary = int(np.count_nonzero(mixed | near))
    return measure, boundary * field.cell_area


def superlevel_ratio(
    t_field: RasterField, lam: float, set_area: float, strict: bool = True
) -> tuple[float, float]:
    measure, err = superlevel_measure(t_field, lam, strict)
    return measure / set_area, err / set_area


def exact_set_average(x, rect: Rect, polys: list[ConvexPolygon]) -> float:
    """|(x + rect) cap union(polys)| / |rect| by exact clipping.

    Clips every polygon against the translated rectangle and measures the
    union of the clips with the exact sweep (members may overlap).
    """
    x = np.asarray(x, dtype=float)
    corners = rect.corners() + x
    pieces = []
    for p in polys:
        if clip_area(corners, p.vertices) > 0.0:
            inter = clip(ConvexPolygon(corners), p)
            if inter is not None:
                pieces.append(inter)
    if not pieces:
        return 0.0
    return union_area_convex_sweep(pieces) / rect.area


# ---------------------------------------------------------------------------
# The blow-up experiment


@dataclass(frozen=True)
class ExperimentRow:
    """One block of the superlevel blow-up experiment."""

    n: int
    t0: float
    t0_nominal: float
    eps_n: float
    ratio_floor: float  # |V^n| / |K^n|, exact
    ratio_measured: float
    raster_err: float
    v_area: float
    k_area: float
    union_delta_area: float
    eq19_ratio: float
    delta: float


def thm2_experiment(
    b: SlopeSequence,
    deltas: list[float],
    n_range,
    resolution: int = 512,
    schedule=None,
    g_cap: float = 100.0,
    tol: float = DEFAULT_TOL,
    rasterized: bool = True,
) -> list[ExperimentRow]:
    """Superlevel blow-up of the maximal operator along the block process.

    For each block n: build the translated triangles K^n and trapezia V^n,
    measure eps_n and the exact floor |V^n|/|K^n| >= 1/(9 eps_n), then
    rasterize the delta_n-scaled indicator and check that the measured
    superlevel mass at the threshold t0 dominates the floor within raster
    error.  Hypothesis checks (finite Perron factor, positive technical
    constant) run first and raise HypothesisError on failure.
    """
    ns = sorted(n_range)
    if not ns:
        raise ValueError("empty block range")
    need = 2 ** (max(ns) + 1)
    if len(b) < need:
        raise ValueError(f"need {need} slopes for block {max(ns)}")
    if len(deltas) <= max(ns):
        raise ValueError("delta sequence shorter than the block range")

    g_est = perron_factor(b, (len(b) - 1) // 3)
    if not math.isfinite(g_est.value) or g_est.value > g_cap:
        raise HypothesisError(
            f"Perron factor estimate {g_est.value:.4g} exceeds the cap {g_cap:.4g} "
            f"(pair n={g_est.n}, l={g_est.l}): directions are not Perron-controlled"
        )
    c_star = technical_constant(b, need - 1)
    if not c_star > 0:
        raise HypothesisError("technical constant is not positive on the prefix")
    t0_nominal = min(math.sqrt(c_star), 1.0) / 72.0

    rows = []
    for n in ns:
        block = build_block(b, n, schedule=schedule, g_estimate=g_est.value)
        kits = block_kits(b, n)
        taus = block.translations
        originals = block.original_triangles()
        translated = block.translated_triangles()
        v_polys = [kit.v_trap.translate((tau, 0.0)) for kit, tau in zip(kits, taus)]

        union_delta = union_area_triangles(originals)
        k_area = union_area_triangles(translated)
        v_area = union_area_convex_sweep(v_polys)
        eps = block.eps_measured
        ratio_floor = v_area / k_area
        eq19 = v_area / union_delta
        if eq19 < 1.0 / 9.0 - tol:
            raise ExperimentError(f"block {n}: |V^n| < (1/9)|union of triangles|")
        if ratio_floor < 1.0 / (9.0 * eps) - tol:
            raise ExperimentError(f"block {n}: ratio floor below 1/(9 eps_n)")

        # rigorous pointwise threshold on the trapezia (see process_builder)
        t0 = min(kit.threshold_factor for kit in kits)

        delta = float(deltas[n])
        ratio_measured = math.nan
        raster_err = math.nan
        if rasterized:
            k_polys = [t.as_polygon().scaled(delta) for t in translated]
            v_scaled = [p.scaled(delta) for p in v_polys]
            rects = [kit.p_rect.scaled(delta) for kit in kits]
            window = _experiment_window(k_polys + v_scaled, rects)
            k_field = rasterize(k_polys, window, resolution)
            t_field = _max_conv_field(k_field, rects, [1.0 / r.area for r in rects])
            measure, err = superlevel_measure(t_field, t0, strict=False)
            scaled_k = delta * delta * k_area
            ratio_measured = measure / scaled_k
            raster_err = err / scaled_k
            if ratio_measured + raster_err < ratio_floor - tol:
                raise ExperimentError(
                    f"block {n}: measured superlevel ratio {ratio_measured:.4g} + "
                    f"err {raster_err:.4g} below the exact floor {ratio_floor:.4g}"
                )
        rows.append(
            ExperimentRow(
                n=n,
                t0=t0,
                t0_nominal=t0_nominal,
                eps_n=eps,
                ratio_floor=ratio_floor,
                ratio_measured=ratio_measured,
                raster_err=raster_err,
                v_area=v_area,
                k_area=k_area,
                union_delta_area=union_delta,
                eq19_ratio=eq19,
                delta=delta,
            )
        )
    return rows


def _experiment_window(polys, rects):
    xs0, ys0, xs1, ys1 = zip(*(p.bounds() for p in polys))
    wx = max(r.axis_extents()[0] for r in rects)
    wy = max(r.axis_extents()[1] for r in rects)
    mx = 0.02 * (max(xs1) - min(xs0)) + wx
    my = 0.02 * (max(ys1) - min(ys0)) + wy
    return (min(xs0) - mx, min(ys0) - my, max(xs1) + mx, max(ys1) + my)


# ---------------------------------------------------------------------------
# Corrected maximal operator and the weak-type test


def corrected_maximal_field(
    f: RasterField,
    seq: RectSequence,
    p: float,
    horizon: int | None = None,
    tail: TailPolicy | None = None,
) -> RasterField:
    """sup over k <= horizon of |integral of f over x+R_k| / W_{k,p}.

    Uses the truncation lower end q_lo inside W: that is the exact correct
    factor of the truncated sequence, and the larger resulting operator makes
    the weak-type test strictly harder.
    """
    h = len(seq) - 1 if horizon is None else horizon
    rects = [seq[k] for k in range(h + 1)]
    weights = []
    for k in range(h + 1):
        q = correct_factor(seq, k, tail or TailPolicy(l_max=h))
        w = lp_correct_factor(q.q_lo, seq[k].area, p)
        weights.append(1.0 / w)
    abs_field = RasterField(f.window, np.abs(f.values), f.err_hint)
    return _max_conv_field(abs_field, rects, weights)


@dataclass(frozen=True)
class WeakTypeRow:
    lam: float
    measure: float
    bound: float
    raster_err: float
    passed: bool


@dataclass(frozen=True)
class WeakTypeReport:
    p: float
    norm_p: float
    rows: tuple[WeakTypeRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def weak_type_check(
    f: RasterField,
    seq: RectSequence,
    p: float,
    lambdas,
    horizon: int | None = None,
    margin: float = 0.05,
) -> WeakTypeReport:
    """Check |{T*_p f > lam}| <= lam^-p ||f||_p^p (1 + margin) + raster error."""
    field = corrected_maximal_field(f, seq, p, horizon)
    norm_pp = f.norm_p(p) ** p
    rows = []
    for lam in lambdas:
        measure, err = superlevel_measure(field, float(lam), strict=True)
        bound = norm_pp / float(lam) ** p
        rows.append(
            WeakTypeRow(
                lam=float(lam),
                measure=measure,
                bound=bound,
                raster_err=err,
                passed=measure <= bound * (1.0 + margin) + err,
            )
        )
    return WeakTypeReport(p=p, norm_p=norm_pp ** (1.0 / p), rows=tuple(rows))


# ---------------------------------------------------------------------------
# The blockwise axis-parallel family with unbounded correct factors


@dataclass(frozen=True)
class LpGoodPair:
    k: int
    i: int
    j: int
    formula_area: float
    measured_area: float
    growth_ratio: float
    witness: float  # 2^(j-i) floor


def lpgood_family(lambdas, blocks: int) -> tuple[RectSequence, list[LpGoodPair]]:
    """Blocks of k+1 equal-area axis rectangles plus the pairwise growth report.

    Block k holds half-sides (2^{-i-1} L, 2^{i-k-1} L) for i = 0..k with
    L = lambdas[k], enumerated in decreasing horizontal side; all areas in a
    block equal 2^{-k} L^2.  The report verifies the closed-form difference
    areas (2^{-i}+2^{-j})(2^{i-k}+2^{j-k}) L^2 against the Minkowski sweep
    and the growth witness ratio >= 2^(j-i).
    """
    lams = [float(x) for x in lambdas]
    if len(lams) < blocks + 1:
        raise ValueError(f"need {blocks + 1} lambda values")
    if any(b <= 0 for b in lams) or any(y >= x for x, y in zip(lams, lams[1:])):
        raise ValueError("lambda sequence must be positive and strictly decreasing")

    rects = []
    for k in range(blocks + 1):
        lam = lams[k]
        for i in range(k + 1):
            rects.append(Rect(2.0 ** (-i - 1) * lam, 2.0 ** (i - k - 1) * lam, 0.0))
    seq = RectSequence(
        tuple(rects),
        source=f"lpgood blocks<={blocks}",
        decay_witness=lams[blocks] * math.sqrt(2.0),
        tail_mode="witness",
    )

    report = []
    for k in range(blocks + 1):
        lam = lams[k]
        base = sum(j + 1 for j in range(k))  # first index of block k
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                formula = (2.0**-i + 2.0**-j) * (2.0 ** (i - k) + 2.0 ** (j - k)) * lam * lam
                measured = difference_set(seq[base + i], seq[base + j]).area
                area_i = seq[base + i].area
                report.append(
                    LpGoodPair(
                        k=k,
                        i=i,
                        j=j,
                        formula_area=formula,
                        measured_area=measured,
                        growth_ratio=measured / area_i,
                        witness=2.0 ** (j - i),
                    )
                )
    return seq, report
