"""Figures written next to the CLI's JSON/CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon as MplPolygon  # noqa: E402

from .charset import DEFAULT_CHARSET  # noqa: E402
from .geometry import RotatedBox, box_corners  # noqa: E402

# fixed hash salt and no timestamp so repeated runs write identical files
_RC = {"svg.hashsalt": "charspot", "svg.fonttype": "none", "font.size": 8}
_META = {"svg": {"Date": None}, "png": {"Software": None}}


def _outline(shape):
    if isinstance(shape, RotatedBox):
        return [(p.x, p.y) for p in box_corners(shape)]
    return shape.vertices.tolist()


def draw_overlay(path, image_size, words=(), chars=(), instances=(), charset=DEFAULT_CHARSET):
    """Word boxes in red, character boxes in blue with their labels."""
    w, h = image_size
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(w / 100, h / 100), dpi=100)
        ax.set_xlim(0, w)
        ax.set_ylim(h, 0)
        ax.set_aspect("equal")
        ax.set_xticks([])
        ax.set_yticks([])
        for shape in [x.box for x in words] + [t.shape for t in instances]:
            ax.add_patch(MplPolygon(_outline(shape), closed=True, fill=False, ec="tab:red", lw=1.2))
        for c in chars:
            ax.add_patch(MplPolygon(_outline(c.box), closed=True, fill=False, ec="tab:blue", lw=0.6))
            ax.text(c.box.cx, c.box.cy, charset.symbol_of(c.label), color="tab:blue", ha="center", va="center")
        for t in instances:
            if t.text:
                x0 = min(p[0] for p in _outline(t.shape))
                y0 = min(p[1] for p in _outline(t.shape))
                ax.text(x0, y0 - 2, t.text, color="tab:red", va="bottom")
        fig.tight_layout(pad=0.1)
        fmt = str(path).rsplit(".", 1)[-1].lower()
        fig.savefig(path, metadata=_META.get(fmt))
        plt.close(fig)


def plot_harvest_stats(path, stats):
    """Accepted-word ratio per harvesting step."""
    steps = [s.step for s in stats]
    ratios = [100 * s.ratio for s in stats]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.plot(steps, ratios, "o-", color="k")
        for s, r in zip(steps, ratios):
            ax.annotate(f"{r:.1f}", (s, r), textcoords="offset points", xytext=(0, 5), ha="center")
        ax.set_xlabel("step")
        ax.set_ylabel("accepted words (%)")
        ax.set_xticks(steps)
        ax.set_ylim(0, 105)
        fig.tight_layout()
        fmt = str(path).rsplit(".", 1)[-1].lower()
        fig.savefig(path, metadata=_META.get(fmt))
        plt.close(fig)
