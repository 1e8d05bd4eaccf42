"""Static SVG figures of a generated pattern (top view and time series)."""

import numpy as np

from zmpgait.support import FOOT_LENGTH, FOOT_WIDTH, sole_rectangle


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "zmpgait"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_pattern(refs, path, foot_dims=(FOOT_LENGTH, FOOT_WIDTH)):
    """Footholds with the desired ZMP and CoM paths in the ground plane."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4))
    for h in refs.plan.footholds:
        corners = sole_rectangle(h.position, h.pitch, 0.0, *foot_dims)
        closed = np.vstack([corners, corners[:1]])
        color = "tab:blue" if h.side == "left" else "tab:red"
        ax.plot(closed[:, 0], closed[:, 1], color=color, lw=1)
    ax.plot(refs.zmp_d[:, 0], refs.zmp_d[:, 1], "k--", lw=1, label="ZMP desired")
    ax.plot(refs.com_d[:, 0], refs.com_d[:, 1], "g-", lw=1.5, label="CoM desired")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(loc="upper left")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_timeseries(refs, path):
    plt = _pyplot()
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 6))
    t = refs.times
    for ax, i, label in ((axes[0], 0, "x [m]"), (axes[1], 1, "y [m]")):
        ax.plot(t, refs.zmp_d[:, i], "k--", lw=1, label="ZMP")
        ax.plot(t, refs.com_d[:, i], "g-", lw=1.5, label="CoM")
        ax.set_ylabel(label)
    axes[0].legend(loc="upper left")
    axes[2].plot(t, refs.com_d[:, 2], "g-", lw=1.5, label="CoM z")
    axes[2].plot(t, refs.left_foot[:, 2], "b-", lw=1, label="left sole z")
    axes[2].plot(t, refs.right_foot[:, 2], "r-", lw=1, label="right sole z")
    axes[2].set_ylabel("z [m]")
    axes[2].set_xlabel("t [s]")
    axes[2].legend(loc="upper left")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
