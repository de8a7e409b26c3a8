"""
Static SVG figures of study tables.
"""

import io

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402

from .errors import PlotError  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.grid": True,
    "grid.linestyle": "--",
    "grid.alpha": 0.7,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "legend.fontsize": 7,
    "svg.fonttype": "none",
    "svg.hashsalt": "thinhomog",
}

# default (x, y...) columns of every plot kind
PLOT_KINDS = {
    "loglog": ("eta", "dist_total"),
    "gaps": ("epsilon", "n", "gap"),
    "bars": ("epsilon", "semidist_equilibria",
             "semidist_attractor_surrogate"),
}


def _figure():
    fig = Figure(figsize=(4, 3))
    return fig, fig.add_subplot()


def _loglog(ax, table, x, y):
    xs = np.array(table.column(x), dtype=float)
    ys = np.array(table.column(y), dtype=float)
    keep = (xs > 0) & (ys > 0)
    xs, ys = xs[keep], ys[keep]
    ax.loglog(xs, ys, "o-", label=y)
    if xs.size:
        ref = ys[0] * xs / xs[0]
        ax.loglog(xs, ref, "k:", label="slope 1")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.legend()


def _gaps(ax, table, x, n, y):
    modes = sorted(set(table.column(n)))
    for mode in modes:
        rows = [r for r in table.rows if r[n] == mode]
        xs = np.array([r[x] for r in rows], dtype=float)
        ys = np.array([r[y] for r in rows], dtype=float)
        keep = (xs > 0) & (ys > 0)
        if keep.any():
            ax.loglog(xs[keep], ys[keep], "o-", label=f"{n}={mode}")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.legend()


def _bars(ax, table, x, *ys):
    labels = [f"{v:g}" for v in table.column(x)]
    pos = np.arange(len(labels))
    width = 0.8 / len(ys)
    for k, y in enumerate(ys):
        values = np.nan_to_num(np.array(table.column(y), dtype=float))
        ax.bar(pos + k * width, values, width, label=y)
    ax.set_xticks(pos + width * (len(ys) - 1) / 2, labels)
    ax.set_xlabel(x)
    ax.set_ylabel("semidistance")
    ax.legend()


_DRAW = {"loglog": _loglog, "gaps": _gaps, "bars": _bars}


def render_svg(table, kind, columns=None, config_hash=None):
    """
    Render ``table`` as a self-contained SVG document.

    Parameters
    ----------
    table : CsvTable
    kind : str
        ``loglog``, ``gaps`` or ``bars``.
    columns : tuple of str, optional
        Overrides the default columns of ``kind``.
    config_hash : str, optional
        Shown in the title.

    Returns
    -------
    str

    Raises
    ------
    PlotError
        If the table lacks a column the plot needs.

    """
    if kind not in PLOT_KINDS:
        raise PlotError(f"Unknown plot kind {kind!r}.")
    columns = tuple(columns or PLOT_KINDS[kind])
    if table.columns:
        missing = [c for c in columns if c not in table.columns]
        if missing:
            raise PlotError(
                f"A {kind} plot needs columns {', '.join(missing)}."
            )
    with matplotlib.rc_context(STYLE):
        fig, ax = _figure()
        if len(table) == 0:
            ax.text(0.5, 0.5, "no data", ha="center", va="center",
                    transform=ax.transAxes)
            ax.set_axis_off()
        else:
            _DRAW[kind](ax, table, *columns)
        if config_hash:
            ax.set_title(f"config {config_hash[:12]}", fontsize=7)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def write_svg(path, table, kind, columns=None, config_hash=None):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(render_svg(table, kind, columns, config_hash))
    return path
