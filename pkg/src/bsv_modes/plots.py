"""Static SVG figures for sweep curves and far-field profiles.

matplotlib is imported lazily (Agg backend) so the numerical pipeline never
depends on a display; SVG metadata dates are suppressed to keep re-runs
comparable.
"""

from __future__ import annotations

import os

from .gain import FarfieldProfile
from .sweep import SweepResult


def _axes(title: str, xlabel: str, ylabel: str):
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: str | os.PathLike) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    fig.savefig(tmp, format="svg", bbox_inches="tight", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    os.replace(tmp, path)


def _series(result: SweepResult, attr: str):
    xs, ys = [], []
    for p in result.points:
        if p.ok:
            xs.append(p.gap_length * 1e3)
            ys.append(getattr(p, attr))
    return xs, ys


def save_sweep_intensity_svg(path, result: SweepResult) -> None:
    fig, ax = _axes("Signal intensity vs crystal separation", "L (mm)",
                    "total photons (arb. units)")
    xs, ys = _series(result, "total_photons")
    ax.plot(xs, ys, lw=1.2)
    for peak in result.intensity_peaks:
        ax.axvline(peak.gap_length * 1e3, color="tab:red", alpha=0.25, lw=0.8)
    _save(fig, path)


def save_sweep_g2_svg(path, result: SweepResult) -> None:
    fig, ax = _axes("Second-order correlation vs crystal separation", "L (mm)", "g2(0)")
    xs, ys = _series(result, "g2")
    ax.plot(xs, ys, lw=1.2, color="tab:green")
    for peak in result.g2_peaks:
        ax.axvline(peak.gap_length * 1e3, color="tab:red", alpha=0.25, lw=0.8)
    _save(fig, path)


def save_profile_svg(path, profile: FarfieldProfile, gap_length: float) -> None:
    fig, ax = _axes(f"Far-field profile at L = {gap_length * 1e3:.1f} mm",
                    "theta (mrad)", "intensity (arb. units)")
    ax.plot([t * 1e3 for t in profile.theta], profile.intensity, lw=1.2)
    _save(fig, path)
