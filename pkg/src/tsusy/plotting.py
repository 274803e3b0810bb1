"""SVG line chart of P(t)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

WIDTH_PX, HEIGHT_PX = 800, 500
_DPI = 72


def probability_svg(times, probability, path, title: str = "") -> Path:
    """Write an 800x500 SVG of ``P(t)``; the file is byte-reproducible."""
    path = Path(path)
    times = np.asarray(times, dtype=float)
    probability = np.asarray(probability, dtype=float)
    with plt.rc_context({"svg.hashsalt": "tsusy", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(WIDTH_PX / _DPI, HEIGHT_PX / _DPI), dpi=_DPI)
        try:
            ax.plot(times, probability, lw=1.2, color="tab:blue")
            ax.set_xlabel("t [1/eV]")
            ax.set_ylabel("P(t)")
            ax.set_xlim(times[0], times[-1])
            if title:
                ax.set_title(title)
            ax.grid(alpha=0.3)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
