"""CSV reading and figure construction.

All styling is pinned at import time (Agg backend, fixed hash salt, no
embedded timestamps) so a figure is a pure function of the rows it is
given: rerunning a job on the same CSV reproduces the output file byte
for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "passense-figures"

import csv

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("cdf", "robustness-x", "robustness-y")

CDF_COLUMNS = ("method", "peb_m", "status")
ROBUSTNESS_COLUMNS = ("method", "axis", "offset_m", "peb_m", "status")


class FigureError(Exception):
    """Unusable input: missing file, missing columns, or no plottable rows."""


@dataclass
class FigureJob:
    """One figure to render.

    ``log_x`` overrides the per-kind default axis scale: the bound spans
    decades across scenes, so the distribution plot defaults to a log
    x axis, while the offset sweep stays linear.
    """

    inputs: tuple[str, ...]
    kind: str
    output: str
    log_x: bool | None = None

    def __post_init__(self):
        self.inputs = tuple(str(p) for p in self.inputs)
        if not self.inputs:
            raise FigureError("at least one input CSV is required")
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}")

    @property
    def log_x_resolved(self) -> bool:
        if self.log_x is not None:
            return self.log_x
        return self.kind == "cdf"


def read_result_rows(paths: tuple[str, ...], required: tuple[str, ...]) -> list[dict]:
    """Concatenated rows of the given CSVs, checked for the needed columns."""
    rows: list[dict] = []
    for path in paths:
        try:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                header = reader.fieldnames or []
                missing = [c for c in required if c not in header]
                if missing:
                    raise FigureError(
                        f"{path}: missing required columns {', '.join(missing)}"
                    )
                rows.extend(reader)
        except OSError as err:
            raise FigureError(f"cannot read {path}: {err}") from err
    return rows


def _usable(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r.get("status") == "ok" and r.get("peb_m")]


def empirical_cdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted sample values and the fraction of samples at or below each.

    ``y[i] = (i + 1) / n`` at the i-th sorted value, so the final level is
    exactly 1 and four samples step in increments of 0.25.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise FigureError("empirical CDF of an empty sample")
    return x, np.arange(1, n + 1) / n


def _methods_in_order(rows: list[dict]) -> list[str]:
    seen: dict[str, None] = {}
    for r in rows:
        seen.setdefault(r["method"])
    return list(seen)


def build_cdf_figure(rows: list[dict], log_x: bool = True):
    """One empirical-CDF step curve per method, rising from 0 to 1."""
    usable = _usable(rows)
    if not usable:
        raise FigureError("no usable rows: every row is missing or not status=ok")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in _methods_in_order(usable):
        pebs = [float(r["peb_m"]) for r in usable if r["method"] == method]
        x, y = empirical_cdf(np.asarray(pebs))
        # prepend the zero level so each curve visibly spans [0, 1]
        ax.step(
            np.concatenate([[x[0]], x]),
            np.concatenate([[0.0], y]),
            where="post",
            label=method,
        )
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel("position error bound (m)")
    ax.set_ylabel("fraction of scenes")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def build_robustness_figure(rows: list[dict], axis: str, log_x: bool = False):
    """Bound versus assumed-position offset, one line per method."""
    usable = [r for r in _usable(rows) if r.get("axis") == axis]
    if not usable:
        raise FigureError(f"no usable rows for axis {axis!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in _methods_in_order(usable):
        pts = sorted(
            (float(r["offset_m"]), float(r["peb_m"]))
            for r in usable
            if r["method"] == method
        )
        offsets = [p[0] for p in pts]
        pebs = [p[1] for p in pts]
        ax.plot(offsets, pebs, marker="o", label=method)
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel(f"assumed-position offset along {axis} (m)")
    ax.set_ylabel("position error bound (m)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def save_figure(fig, output: str) -> None:
    """Write the figure without volatile metadata, format by extension."""
    suffix = Path(output).suffix.lower()
    metadata = None
    if suffix == ".svg":
        metadata = {"Date": None}
    elif suffix == ".png":
        metadata = {"Software": None}
    fig.savefig(output, metadata=metadata)
    plt.close(fig)


def plot_cdf(job: FigureJob) -> None:
    """Render a bound-distribution figure for one job."""
    rows = read_result_rows(job.inputs, CDF_COLUMNS)
    save_figure(build_cdf_figure(rows, log_x=job.log_x_resolved), job.output)


def plot_robustness(job: FigureJob) -> None:
    """Render an offset-sweep figure for one job."""
    axis = job.kind.rsplit("-", 1)[1]
    rows = read_result_rows(job.inputs, ROBUSTNESS_COLUMNS)
    save_figure(
        build_robustness_figure(rows, axis, log_x=job.log_x_resolved), job.output
    )


def render_job(job: FigureJob) -> None:
    """Dispatch a job to the matching renderer."""
    if job.kind == "cdf":
        plot_cdf(job)
    else:
        plot_robustness(job)
