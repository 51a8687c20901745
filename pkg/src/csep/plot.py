"""Standalone SVG renderings of the CSV outputs."""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError
from .io import read_csv


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "csep"
    return plt


def _save(plt, fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_csv(csv_path, svg_path):
    """Pick a rendering from the CSV header: exits, ECDF, survival or a grid field."""
    header, cols = read_csv(csv_path)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if header[:2] == ["re", "im"]:
        x = np.sort(cols["re"])
        ax.step(x, np.arange(1, len(x) + 1) / len(x), where="post", label="ECDF of Re")
        ax.set_xlabel("Re of exit position")
        ax.set_ylabel("probability")
    elif header[:2] == ["x", "ecdf"]:
        ax.step(cols["x"], cols["ecdf"], where="post", label="ECDF")
        if np.all(np.isfinite(cols["target_cdf"])):
            ax.plot(cols["x"], cols["target_cdf"], "--", label="target")
        ax.set_xlabel("x")
        ax.set_ylabel("probability")
    elif header[:2] == ["t", "survivors"]:
        frac = cols["survivors"] / cols["n_total"]
        keep = frac > 0
        ax.semilogy(cols["t"][keep], frac[keep])
        ax.set_xlabel("t")
        ax.set_ylabel("P(tau > t)")
    elif header == ["x", "y", "value"]:
        sc = ax.scatter(cols["x"], cols["y"], c=cols["value"], s=1, marker="s", linewidths=0)
        fig.colorbar(sc, ax=ax)
        ax.set_aspect("equal")
    else:
        plt.close(fig)
        raise DomainError(f"unrecognised CSV header {header}")
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    _save(plt, fig, svg_path)


def plot_boundary(spec, svg_path, height: float = 8.0, n: int = 801):
    """Boundary of a domain; for ``U`` this is the curve ``h(x)`` with the strip walls."""
    from .geometry import GrimReaperU, TruncatedU, grim_reaper_height

    plt = _figure()
    fig, ax = plt.subplots(figsize=(4.5, 6))
    if isinstance(spec, (GrimReaperU, TruncatedU)):
        s = spec.scale
        top = spec.H if isinstance(spec, TruncatedU) else height * s
        x = np.linspace(-s, s, n + 2)[1:-1]
        y = grim_reaper_height(x, s)
        keep = y <= top
        ax.plot(x[keep], y[keep], label="h(x)")
        ax.axvline(-s, ls=":", c="gray")
        ax.axvline(s, ls=":", c="gray")
        if isinstance(spec, TruncatedU):
            ax.axhline(top, ls="--", c="gray")
    else:
        from .geometry import bounding_box, contains_points

        box = bounding_box(spec)
        if box is None:
            raise DomainError(f"cannot draw unbounded {spec.kind}")
        xs = np.linspace(box.x0, box.x1, 400)
        ys = np.linspace(box.y0, box.y1, 400)
        X, Y = np.meshgrid(xs, ys)
        ax.contour(X, Y, contains_points(spec, X, Y).reshape(X.shape).astype(float), levels=[0.5])
    ax.set_aspect("equal")
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    _save(plt, fig, svg_path)
