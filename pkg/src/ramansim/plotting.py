"""Static figures for the CLI reports.

Uses the Agg backend and strips the PNG software tag so reruns with the
same data write byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 120,
}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_pulse(time_env, freq_env, path):
    """Intensity in time and spectral intensity with phase."""
    with plt.rc_context(STYLE):
        fig, (ax_t, ax_f) = plt.subplots(1, 2, figsize=(7.5, 2.8), layout="constrained")
        ax_t.plot(time_env.axis, time_env.intensity(), lw=1)
        ax_t.set_xlabel("t (ps)")
        ax_t.set_ylabel("|e(t)|^2")
        spec = freq_env.intensity()
        ax_f.plot(freq_env.axis, spec / spec.max(), lw=1)
        ax_f.set_xlabel("f (THz)")
        ax_f.set_ylabel("|E(f)|^2 (norm.)")
        keep = spec > 1e-3 * spec.max()
        ax_p = ax_f.twinx()
        ax_p.plot(freq_env.axis[keep], np.angle(freq_env.samples[keep]), ".", ms=1.5, color="C1")
        ax_p.set_ylabel("phase (rad)")
        return _save(fig, path)


def plot_distribution(dist, path, t_lim=3.0, f_lim=3.5):
    """Colour map of a Wigner or Husimi distribution."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.4), layout="constrained")
        ti = np.abs(dist.time_axis) <= t_lim
        fi = np.abs(dist.freq_axis) <= f_lim
        vals = dist.values[np.ix_(ti, fi)]
        vmax = np.max(np.abs(vals)) or 1.0
        cmap, vmin = ("RdBu_r", -vmax) if dist.kind == "wigner" else ("viridis", 0.0)
        mesh = ax.pcolormesh(
            dist.time_axis[ti], dist.freq_axis[fi], vals.T, cmap=cmap, vmin=vmin, vmax=vmax,
            shading="auto", rasterized=True,
        )
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel("t (ps)")
        ax.set_ylabel("f (THz)")
        ax.set_title(dist.kind)
        return _save(fig, path)


def plot_scan(scan, path, label=None):
    """Mean asymmetry with one-standard-error bars versus phase offset."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0), layout="constrained")
        err = np.nan_to_num(scan.stderr_asymmetry)
        ax.errorbar(scan.phases, scan.mean_asymmetry, yerr=err, fmt="o-", ms=3, lw=1, capsize=2, label=label)
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.set_xlabel("phase offset (rad)")
        ax.set_ylabel("mean asymmetry")
        if label:
            ax.legend()
        return _save(fig, path)


def plot_history(result, path):
    """Generation best, mean and running elite of a GA run."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0), layout="constrained")
        gen = [h.generation for h in result.history]
        ax.plot(gen, [h.best for h in result.history], "o-", ms=3, lw=1, label="best")
        ax.plot(gen, [h.mean for h in result.history], "s-", ms=3, lw=1, label="mean")
        ax.plot(gen, [h.elite_best for h in result.history], "k--", lw=1, label="elite")
        ax.set_xlabel("generation")
        ax.set_ylabel("fitness")
        ax.legend()
        return _save(fig, path)
