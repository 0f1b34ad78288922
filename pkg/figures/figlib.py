"""Rendering of publication-style figures from the vcstab CLI's CSV outputs.

Four figure kinds are supported:

- ``bifurcation``: equilibrium branches (total conductance vs total demand)
  from a ``sweep`` CSV, stable branches solid and unstable dashed, with
  P_max and g_l reference lines.
- ``timeseries-power``: per-load power vs demand from a ``simulate`` CSV.
- ``timeseries-conductance``: per-load conductance from a ``simulate`` CSV.
- ``ab-grid``: terminal-outcome map over controller gain pairs.

Rendering is a pure function of the CSV bytes and the spec: fixed style, no
timestamps, so repeated renders are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("bifurcation", "timeseries-power", "timeseries-conductance", "ab-grid")

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "vcstab-figures",
}

#: Terminal-verdict colors for the gain-grid map.
VERDICT_COLORS = {
    "converged-to-Ep": "#2166ac",
    "converged-to-Es_low": "#4dac26",
    "collapsed": "#b2182b",
    "other": "#999999",
}


class RenderError(ValueError):
    """Unusable spec or input data (missing file, column, or unknown kind)."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input: str
    output: str
    annotate: dict = field(default_factory=dict)
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise RenderError(f"cannot read spec {path}: {exc}") from exc
        try:
            return cls(doc["kind"], doc["input"], doc["output"],
                       doc.get("annotate", {}), doc.get("title"))
        except KeyError as exc:
            raise RenderError(f"spec is missing required field {exc}") from exc


def read_csv(path, required=()):
    """Header + rows as dicts; missing required columns are a RenderError."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames
            rows = list(reader)
    except OSError as exc:
        raise RenderError(f"cannot read input {path}: {exc}") from exc
    if header is None:
        raise RenderError(f"input {path} is empty (no header row)")
    missing = [c for c in required if c not in header]
    if missing:
        raise RenderError(f"input {path} lacks required column(s) {missing}; "
                          f"header is {header}")
    return header, rows


def _new_axes(spec, xlabel, ylabel):
    fig, ax = plt.subplots()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _reference_lines(ax, annotate, vertical_key="p_max", horizontal_key="g_l"):
    if vertical_key and vertical_key in annotate:
        ax.axvline(float(annotate[vertical_key]), color="0.35", lw=0.9,
                   ls=":", label=vertical_key)
    if horizontal_key and horizontal_key in annotate:
        ax.axhline(float(annotate[horizontal_key]), color="0.55", lw=0.9,
                   ls=":", label=horizontal_key)


def render_bifurcation(spec: FigureSpec):
    _, rows = read_csv(spec.input, required=("p0n", "branch", "gN", "stable", "exists"))
    fig, ax = _new_axes(spec, "total demand", "total conductance")
    branches: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for row in rows:
        if row["exists"] != "1":
            continue
        style = "solid" if row["stable"] == "stable" else "dashed"
        branches.setdefault((row["branch"], style), []).append(
            (float(row["p0n"]), float(row["gN"])))
    for (branch, style), pts in sorted(branches.items()):
        pts.sort()
        xs, ys = zip(*pts)
        ax.plot(xs, ys, ls="-" if style == "solid" else "--",
                marker="o", ms=3, label=f"{branch} ({style})")
    _reference_lines(ax, spec.annotate)
    if branches or spec.annotate:
        ax.legend(fontsize=8)
    return fig


def _collapse_time(rows):
    for row in rows:
        if row.get("collapsed") == "1":
            return float(row["t"])
    return None


def _series_columns(header, prefix):
    cols = [c for c in header if c.startswith(prefix)]
    return sorted(cols, key=lambda c: int(c[len(prefix):]))


def render_timeseries(spec: FigureSpec, prefix, ylabel, reference_prefix=None):
    header, rows = read_csv(spec.input, required=("t",))
    cols = _series_columns(header, prefix)
    if not cols:
        raise RenderError(f"input {spec.input} lacks required column(s) "
                          f"['{prefix}1', ...]; header is {header}")
    fig, ax = _new_axes(spec, "time", ylabel)
    ts = [float(r["t"]) for r in rows]
    for col in cols:
        ax.plot(ts, [float(r[col]) for r in rows], label=col)
    if reference_prefix is not None:
        for col in _series_columns(header, reference_prefix):
            ax.plot(ts, [float(r[col]) for r in rows], ls="--", lw=0.8,
                    color="0.4", label=col)
    t_collapse = _collapse_time(rows)
    if t_collapse is not None:
        ax.axvline(t_collapse, color="#b2182b", lw=1.2, label="collapse")
    _reference_lines(ax, spec.annotate, vertical_key="t_mark",
                     horizontal_key="p_max" if prefix == "P_" else "g_l")
    if rows or spec.annotate:
        ax.legend(fontsize=8, ncol=2)
    return fig


def render_ab_grid(spec: FigureSpec):
    _, rows = read_csv(spec.input, required=("a", "b", "verdict"))
    fig, ax = _new_axes(spec, "damping gain b", "filter rate a")
    seen = []
    for row in rows:
        verdict = row["verdict"]
        color = VERDICT_COLORS.get(verdict, VERDICT_COLORS["other"])
        ax.scatter(float(row["b"]), float(row["a"]), s=90, marker="s",
                   color=color, label=None if verdict in seen else verdict)
        seen.append(verdict)
    _reference_lines(ax, spec.annotate, vertical_key="b_max", horizontal_key=None)
    if rows:
        ax.legend(fontsize=8)
    return fig


def render_figure(spec: FigureSpec):
    """Build the matplotlib Figure for a spec (no file output)."""
    with plt.rc_context(STYLE):
        if spec.kind == "bifurcation":
            return render_bifurcation(spec)
        if spec.kind == "timeseries-power":
            return render_timeseries(spec, "P_", "power", reference_prefix="P0_")
        if spec.kind == "timeseries-conductance":
            return render_timeseries(spec, "g_", "conductance")
        return render_ab_grid(spec)


def render(spec: FigureSpec):
    """Render the spec to its output path (png or svg, timestamp-free)."""
    fig = render_figure(spec)
    try:
        metadata = {"Date": None} if spec.output.endswith(".svg") else {}
        fig.savefig(spec.output, metadata=metadata)
    finally:
        plt.close(fig)
    return spec.output
