"""Figure rendering for simulation reports.

Figures are written straight to files with the Agg backend; nothing is
shown on screen.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .bounds import DssBound, eval_bound  # noqa: E402

STYLE = {"c1": dict(ls="--"), "c2": dict(ls="-")}


def _figure(n_rows, width=7.0):
    golden_ratio = (np.sqrt(5) - 1.0) / 2.0
    fig, axes = plt.subplots(n_rows, 1, sharex=True,
                             figsize=(width, width * golden_ratio * max(1, 0.6 * n_rows)))
    return fig, np.atleast_1d(axes)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_error_norms(runs, path):
    """State error norm of each run with its bounds.

    Parameters
    ----------
    runs : dict
        ``variant -> (trajectory, BoundInputs or None)``.
    path : str or Path
    """
    fig, (ax,) = _figure(1)
    for variant, (traj, inputs) in runs.items():
        style = STYLE.get(variant, {})
        ax.plot(traj.times, traj.error_norm_x(), label=f"error norm {variant.upper()}", **style)
    bounds_drawn = False
    for traj, inputs in runs.values():
        if inputs is None or bounds_drawn:
            continue
        for kind, label in (("original_eq16", "bound (integral action)"),
                            ("monteil_eq17", "bound (no integral action)")):
            ax.plot(traj.times, eval_bound(DssBound(kind, inputs), traj.times), lw=0.9, label=label)
        bounds_drawn = True
    ax.set_yscale("log")
    ax.set_xlabel("time (s)")
    ax.set_ylabel(r"$\sup_i |x_i - x_i^\star|_2$")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_gap_errors(runs, path):
    """Gap error of the first vehicle for every run, then all gaps per run."""
    fig, axes = _figure(1 + len(runs))
    for variant, traj in runs.items():
        axes[0].plot(traj.times, traj.gap_errors()[:, 0], label=variant.upper(),
                     **STYLE.get(variant, {}))
    axes[0].set_ylabel(r"$e_{1,0}$ (m)")
    axes[0].legend(fontsize="small")
    for ax, (variant, traj) in zip(axes[1:], runs.items()):
        gaps = traj.gap_errors()
        for i in range(traj.n_vehicles):
            ax.plot(traj.times, gaps[:, i], lw=0.9, label=f"$e_{{{i + 1},{i}}}$")
        ax.set_ylabel(f"gap error {variant.upper()} (m)")
        if traj.n_vehicles <= 10:
            ax.legend(fontsize="x-small", ncol=min(5, traj.n_vehicles))
    axes[-1].set_xlabel("time (s)")
    return _save(fig, path)


def plot_states(traj, path):
    """Velocity, acceleration and integral state histories."""
    fig, axes = _figure(3)
    axes[0].plot(traj.times, traj.v, lw=0.9)
    axes[0].set_ylabel("velocity (m/s)")
    axes[1].plot(traj.times, traj.a, lw=0.9)
    axes[1].set_ylabel(r"acceleration (m/s$^2$)")
    axes[2].plot(traj.times, traj.zeta, lw=0.9)
    axes[2].set_ylabel(r"integral state $\zeta$")
    axes[2].set_xlabel("time (s)")
    return _save(fig, path)
