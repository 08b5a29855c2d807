"""Static figures for evaluation reports and speed maps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .raster_features import FEATURE_NAMES, FeatureMap

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}
# stable PNG bytes across runs
_META = {"Software": None}


def speed_map(xy, true_mph, pred_mph, path, vmin=None, vmax=None):
    """Side-by-side ground-truth and predicted speed maps."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    true_mph = np.asarray(true_mph, dtype=float)
    pred_mph = np.asarray(pred_mph, dtype=float)
    vmin = np.min([true_mph.min(), pred_mph.min()]) if vmin is None else vmin
    vmax = np.max([true_mph.max(), pred_mph.max()]) if vmax is None else vmax
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.6), sharex=True, sharey=True)
        for ax, values, title in zip(axes, (true_mph, pred_mph), ("Ground truth", "Predicted")):
            sc = ax.scatter(xy[:, 0], xy[:, 1], c=values, cmap="viridis", vmin=vmin, vmax=vmax,
                            s=18, edgecolors="none")
            ax.set_title(title)
            ax.set_xlabel("easting (m)")
            ax.set_aspect("equal", adjustable="box")
        axes[0].set_ylabel("northing (m)")
        fig.colorbar(sc, ax=axes, label="free-flow speed (mph)", shrink=0.9)
        fig.savefig(path, metadata=_META)
        plt.close(fig)


def prediction_scatter(true_mph, pred_mph, path, band=5.0):
    """Predicted vs true speed with the +-``band`` mph acceptance corridor."""
    true_mph = np.asarray(true_mph, dtype=float)
    pred_mph = np.asarray(pred_mph, dtype=float)
    lo = min(true_mph.min(), pred_mph.min()) - band
    hi = max(true_mph.max(), pred_mph.max()) + band
    hit = np.abs(pred_mph - true_mph) <= band
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.fill_between([lo, hi], [lo - band, hi - band], [lo + band, hi + band],
                        color="0.9", label=f"within {band:g} mph")
        ax.plot([lo, hi], [lo, hi], color="0.5", lw=0.8)
        ax.scatter(true_mph[hit], pred_mph[hit], s=14, color="tab:blue", label="correct")
        ax.scatter(true_mph[~hit], pred_mph[~hit], s=14, color="tab:red", marker="x",
                   label="incorrect")
        ax.set_xlim(lo, hi)
        ax.set_ylim(lo, hi)
        ax.set_xlabel("true speed (mph)")
        ax.set_ylabel("predicted speed (mph)")
        ax.legend(loc="upper left", frameon=False)
        fig.savefig(path, metadata=_META)
        plt.close(fig)


def feature_map_grid(fmap: FeatureMap, path):
    """All channels of a feature map, one row per group size."""
    ks = fmap.ks
    with plt.rc_context(RC):
        fig, axes = plt.subplots(len(ks), len(FEATURE_NAMES),
                                 figsize=(1.3 * len(FEATURE_NAMES), 1.4 * len(ks)),
                                 squeeze=False)
        for s, k in enumerate(ks):
            for f, name in enumerate(FEATURE_NAMES):
                ax = axes[s, f]
                ax.imshow(fmap.channel(name, k), origin="lower", cmap="magma")
                ax.set_xticks([])
                ax.set_yticks([])
                if s == 0:
                    ax.set_title(name)
            axes[s, 0].set_ylabel(f"k={k}")
        fig.savefig(path, metadata=_META)
        plt.close(fig)
