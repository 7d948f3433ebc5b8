"""SVG figures rendered from the CSV outputs.

Every function reads only the CSV file it is given, so regenerating a plot
from the same CSV yields the same SVG. Metadata dates and random element ids
are disabled to keep the output byte-stable.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .csvio import read_csv  # noqa: E402

_RC = {"svg.hashsalt": "tfsuperres", "svg.fonttype": "path", "font.size": 9,
       "axes.spines.top": False, "axes.spines.right": False}


def _comment_value(comments, key):
    for c in comments:
        if c.startswith(key + ":"):
            return c.split(":", 1)[1].strip()
    return None


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _finite(y):
    y = np.asarray(y, dtype=float)
    return np.where(np.isfinite(y), y, np.nan)


def plot_bounds(csv_path, svg_path):
    comments, cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        s = cols["s_over_sigma"]
        ax.fill_between(s, _finite(cols["std_crlb"]), 1e9, color="tab:blue", alpha=0.25,
                        label="standard CRLB (excluded)")
        ax.plot(s, cols["model_crlb"], color="k", lw=1.2, label="pulse-gate model CRLB")
        ax.plot(s, cols["quantum_limit"], "--", color="tab:red", lw=1.2, label="quantum limit")
        top = np.nanmax(_finite(cols["std_crlb"])[1:]) if s.size > 1 else 1.0
        ax.set_ylim(0.5 * np.min(cols["quantum_limit"]), 2 * top)
        ax.set_yscale("log")
        ax.set_xlabel("separation / sigma")
        ax.set_ylabel("variance bound / sigma^2")
        n = _comment_value(comments, "photons")
        if n:
            ax.set_title(f"N = {n}")
        ax.legend(frameon=False, fontsize=7)
        fig.tight_layout()
        _save(fig, svg_path)


def plot_fig2(csv_path, svg_path):
    comments, cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.0, 3.4))
        s = cols["s_over_sigma"]
        ax.plot(s, cols["slope_one"], "--", color="0.4", lw=1, label="slope one")
        ax.plot(s, cols["theory_raw"], color="k", lw=1.3, label="theory (closed form)")
        if "mc_mean_raw" in cols:
            ax.errorbar(s, cols["mc_mean_raw"], yerr=cols["mc_std_raw"], fmt="o", ms=3,
                        color="tab:red", capsize=2, label="simulated counts")
        floor = cols["theory_raw"][0]
        ax.axhspan(0, floor, color="tab:orange", alpha=0.15, lw=0)
        ax.annotate(f"floor {floor:.3f}", (s[-1], floor), ha="right", va="bottom", fontsize=7)
        domain = _comment_value(comments, "domain") or ""
        ax.set_xlabel(f"true separation / sigma ({domain})")
        ax.set_ylabel("raw estimate / sigma")
        ax.set_xlim(0, s.max())
        ax.set_ylim(0, s.max() * 1.05)
        ax.legend(frameon=False, fontsize=7, loc="upper left")
        fig.tight_layout()
        _save(fig, svg_path)


def plot_fig3(csv_path, svg_path):
    comments, cols = read_csv(csv_path)
    counts = sorted(set(cols["total_counts"].astype(int)), reverse=True)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(counts), 1, figsize=(4.0, 2.0 * len(counts)), sharex=True,
                                 squeeze=False)
        for ax, n in zip(axes[:, 0], counts):
            sel = cols["total_counts"] == n
            s = cols["s_over_sigma"][sel]
            std = _finite(cols["std_crlb"][sel])
            ql = cols["quantum_limit"][sel]
            ax.fill_between(s, std, 1.0, color="tab:blue", alpha=0.25, lw=0)
            ax.plot(s, ql, "--", color="tab:red", lw=1.1)
            ax.plot(s, cols["model_crlb"][sel], ":", color="k", lw=1)
            ax.plot(s, cols["mse"][sel], "o", ms=3, color="tab:red")
            ax.set_yscale("log")
            ax.set_ylim(0.5 * ql.min(), max(10 * ql.min(), 2 * np.nanmax(cols["mse"][sel])))
            ax.set_ylabel("MSE / sigma^2")
            ax.text(0.98, 0.92, f"N = {n}", transform=ax.transAxes, ha="right", va="top",
                    fontsize=7)
        domain = _comment_value(comments, "domain") or ""
        axes[-1, 0].set_xlabel(f"separation / sigma ({domain})")
        fig.tight_layout()
        _save(fig, svg_path)
