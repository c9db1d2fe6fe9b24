"""Static SVG line charts with byte-stable output."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .csvio import atomic_write_text  # noqa: E402

_RC = {"svg.hashsalt": "spinnoise", "svg.fonttype": "path", "path.simplify": False}


def line_chart(path, series, xlabel: str, ylabel: str, title: str = "") -> None:
    """``series`` is a list of (x, y, label); writes an SVG file."""
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for x, y, label in series:
            ax.plot(x, y, label=label, lw=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if any(label for _, _, label in series):
            ax.legend(fontsize=7)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    atomic_write_text(path, buf.getvalue())
