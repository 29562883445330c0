"""perronlab: rectangle differentiation processes, measured.

Exact geometry for difference sets and correct factors, Perron-tree blocks
with measured area shrink, companion-rectangle intersection bounds, and
rasterized maximal-operator experiments, plus a CLI that writes CSV/JSON/SVG
reports.
"""

from .geom_core import (
    ConvexPolygon,
    Rect,
    Triangle,
    area,
    area_lower_bound,
    bounding_rect_hat,
    clip,
    difference_set,
    minkowski_sum,
    paper_triangle,
    scaled_contains,
)
from .union_area import (
    union_area_convex_sweep,
    union_area_grid,
    union_area_star,
    union_area_triangles,
)
from .correct_factors import (
    GrowthVerdict,
    RectSequence,
    TailPolicy,
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
from .perron import (
    PerronBlock,
    SlopeSequence,
    bisection_step,
    block_svg,
    build_block,
    perron_factor,
    slope_sequence,
    technical_constant,
)
from .process_builder import (
    RectProcess,
    TriangleKit,
    assemble_process,
    companion_rect,
    verify_intersection_bound,
)
from .maximal import (
    ExperimentRow,
    RasterField,
    corrected_maximal_field,
    lpgood_family,
    maximal_field,
    rasterize,
    superlevel_measure,
    superlevel_ratio,
    thm2_experiment,
    weak_type_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
