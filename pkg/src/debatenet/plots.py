"""Standalone SVG figures: layout scatter, CCDF steps, histogram bars.

SVG output is made reproducible by fixing the element-id salt and dropping
the creation date from the metadata.
"""
from __future__ import annotations

import io
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .classify import KNOWN_LABELS, BoundarySpec, ClusterAssignment, Label  # noqa: E402

COLORS = {
    Label.MAJORITY: "#1f77b4",
    Label.MINORITY: "#d62728",
    Label.INTERMEDIATE: "#2ca02c",
    Label.UNCLASSIFIED: "#7f7f7f",
}


def _svg(fig) -> bytes:
    buf = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "debatenet", "svg.fonttype": "path"}):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def layout_svg(embedding, assignment: ClusterAssignment | None = None, boundaries: BoundarySpec | None = None,
               title: str = "") -> bytes:
    """Scatter of node positions, coloured by label, with pole outlines."""
    fig, ax = plt.subplots(figsize=(6, 6))
    xy = embedding.coords
    if assignment is None:
        ax.scatter(xy[:, 0], xy[:, 1], s=2, c="#444444", linewidths=0)
    else:
        labels = np.array([assignment.label(n).value for n in embedding.nodes])
        for lab in Label:
            sel = labels == lab.value
            if sel.any():
                ax.scatter(xy[sel, 0], xy[sel, 1], s=2, c=COLORS[lab], linewidths=0, label=lab.value)
        ax.legend(loc="upper right", markerscale=4, fontsize=8)
    if boundaries is not None:
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        for region in boundaries.regions:
            v = np.asarray(region.vertices + region.vertices[:1])
            ax.plot(v[:, 0], v[:, 1], color="black", linewidth=0.8)
        pad = 0.05 * (hi - lo)
        ax.set_xlim(lo[0] - pad[0], hi[0] + pad[0])
        ax.set_ylim(lo[1] - pad[1], hi[1] + pad[1])
    ax.set_aspect("equal", adjustable="box")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    return _svg(fig)


def ccdf_svg(series: Mapping[str, Sequence[tuple]], xlabel: str, title: str = "") -> bytes:
    """Step plot of complementary CDFs; ``series`` maps name -> [(v, P[X >= v])]."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, points in series.items():
        if not points:
            continue
        v, p = zip(*points)
        ax.step(v, p, where="post", label=name)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("P[X >= x]")
    if len(series) > 1:
        ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _svg(fig)


def histogram_svg(hist, title: str = "") -> bytes:
    """One panel per group over the all-node background, plus a grouped panel."""
    edges = hist.edges
    centers = (edges[:-1] + edges[1:]) / 2
    width = edges[1] - edges[0]
    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True)
    for ax, lab in zip(axes.flat, KNOWN_LABELS):
        ax.bar(centers, hist.mass_all, width=width, color="#cccccc", label="all")
        ax.bar(centers, hist.mass[lab], width=width * 0.8, color=COLORS[lab], label=lab.value)
        ax.legend(fontsize=7)
    ax = axes.flat[3]
    k = len(KNOWN_LABELS)
    for i, lab in enumerate(KNOWN_LABELS):
        ax.bar(centers + (i - (k - 1) / 2) * width / k, hist.mass[lab], width=width / k, color=COLORS[lab], label=lab.value)
    ax.legend(fontsize=7)
    for ax in axes[1]:
        ax.set_xlabel("local assortativity")
    if title:
        fig.suptitle(title)
    return _svg(fig)
