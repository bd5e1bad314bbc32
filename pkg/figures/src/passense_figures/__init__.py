"""Static figures from sensing-experiment result CSVs.

Consumes the documented results schema (``method``, ``scene_id``,
``seed``, ``axis``, ``offset_m``, ``peb_m``, ``stage1_trace``,
``stage2_trace``, ``wall_s``, ``status``) and renders two figure kinds:
the empirical distribution of the position error bound across scenes,
and the bound versus assumed-position offset for one sweep axis.
Rendering is deterministic: the same CSV yields byte-identical SVG.
"""

from .plots import (
    FigureError,
    FigureJob,
    empirical_cdf,
    build_cdf_figure,
    build_robustness_figure,
    plot_cdf,
    plot_robustness,
    read_result_rows,
    render_job,
)

__version__ = "0.1.0"

__all__ = [
    "FigureError",
    "FigureJob",
    "empirical_cdf",
    "build_cdf_figure",
    "build_robustness_figure",
    "plot_cdf",
    "plot_robustness",
    "read_result_rows",
    "render_job",
]
