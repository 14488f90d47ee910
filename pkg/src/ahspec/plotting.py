"""Self-contained, byte-reproducible SVG convergence plots.

The plotted numbers are embedded in the SVG as an XML comment so that a figure
can be audited without the accompanying CSV.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "svg.hashsalt": "ahspec",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 4,
}


def _data_comment(series):
    lines = ["ahspec plot data: label, x, y, reference"]
    for label, (x, y, ref) in series.items():
        lines.append(f"[{label}] reference={ref!r}")
        lines.extend(f"  {float(a)!r}, {float(b)!r}" for a, b in zip(x, y))
    # "--" may not appear inside an XML comment
    return "<!--\n" + "\n".join(lines).replace("--", "- -") + "\n-->\n"


def convergence_svg(series, xlabel="R", ylabel="eigenvalue", title="", logx=False):
    """Render ``{label: (x, y, reference)}`` as SVG text (data embedded as a comment)."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for i, (label, (x, y, ref)) in enumerate(series.items()):
            color = f"C{i % 10}"
            ax.plot(x, y, "o-", color=color, label=label)
            if ref is not None:
                ax.axhline(ref, color=color, ls="--", lw=0.8)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if series:
            ax.legend(fontsize=7, frameon=False)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    svg = buf.getvalue()
    head, sep, tail = svg.partition("<svg")
    return head + _data_comment(series) + sep + tail


def write_svg(path, series, **kwargs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(convergence_svg(series, **kwargs))
    return path
