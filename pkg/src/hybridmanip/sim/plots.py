"""Report figures rendered next to a trajectory CSV (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_report(cols: dict, out_path, title: str = "") -> list[Path]:
    """Write trajectory, error and input figures; returns the file paths.

    ``cols`` is the column dict produced by :func:`read_log` or a
    simulation result.  Missing estimator columns are simply skipped.
    """
    plt = _pyplot()
    out_path = Path(out_path)
    stem = out_path.with_suffix("")
    t = np.asarray(cols["t"], dtype=float)
    written = []
    if t.size == 0:
        return written

    P = np.column_stack([cols["x"], cols["y"], cols["z"]])
    R = np.column_stack([cols["ref_x"], cols["ref_y"], cols["ref_z"]])
    err = np.linalg.norm(P - R, axis=1)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    # the two most varied axes of the reference give the drawing plane
    spread = np.ptp(np.vstack([P, R]), axis=0)
    i, j = sorted(np.argsort(spread)[-2:])
    names = "xyz"
    axes[0].plot(R[:, i], R[:, j], "k--", lw=1, label="reference")
    axes[0].plot(P[:, i], P[:, j], lw=1.2, label="vehicle")
    axes[0].set_xlabel(f"{names[i]} [m]")
    axes[0].set_ylabel(f"{names[j]} [m]")
    axes[0].set_aspect("equal", adjustable="datalim")
    axes[0].legend(loc="best")
    for k, n in enumerate(names):
        axes[1].plot(t, P[:, k] - R[:, k], lw=1, label=f"e_{n}")
    axes[1].plot(t, err, "k", lw=1.2, label="|e|")
    axes[1].set_xlabel("t [s]")
    axes[1].set_ylabel("error [m]")
    axes[1].legend(loc="best")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    p = Path(f"{stem}_tracking.png")
    fig.savefig(p, dpi=110)
    plt.close(fig)
    written.append(p)

    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    axes[0].plot(t, cols["U1"], lw=1)
    axes[0].set_ylabel("U1 [N]")
    if "F_n" in cols:
        axes[1].plot(t, cols["F_n"], lw=1, label="F_n")
    if "gamma_hat" in cols and np.any(np.isfinite(cols["gamma_hat"])):
        ax2 = axes[1].twinx()
        ax2.plot(t, np.degrees(cols["gamma_hat"]), "C1", lw=1)
        ax2.set_ylabel("gamma_hat [deg]", color="C1")
    axes[1].set_ylabel("normal force [N]")
    axes[1].set_xlabel("t [s]")
    fig.tight_layout()
    p = Path(f"{stem}_inputs.png")
    fig.savefig(p, dpi=110)
    plt.close(fig)
    written.append(p)
    return written
