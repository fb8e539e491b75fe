"""Figure rendering for solver reports: convergence curves and delta sweeps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .outer import RunReport  # noqa: E402


def save_convergence_figure(path, report: RunReport, title: str = "") -> None:
    """Semilog plot of the KKT residual and the objective gap per iteration."""
    ks = [r.k for r in report.records]
    gs = [r.g_norm for r in report.records]
    phis = [r.phi for r in report.records]
    best = min(phis + [report.final_phi])
    gaps = [max(p - best, 0.0) for p in phis]

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].semilogy(ks, gs, marker=".", lw=1)
    axes[0].set_xlabel("iteration $k$")
    axes[0].set_ylabel(r"$\|G(x_k)\|$")
    axes[1].semilogy(ks, [g if g > 0 else float("nan") for g in gaps],
                     marker=".", lw=1, color="tab:orange")
    axes[1].set_xlabel("iteration $k$")
    axes[1].set_ylabel(r"$\varphi(x_k) - \varphi_{\mathrm{best}}$")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_delta_sweep_figure(path, rows, title: str = "") -> None:
    """Average wall time and iteration count as a function of delta."""
    deltas = [r["delta"] for r in rows]
    fig, ax1 = plt.subplots(figsize=(5.5, 3.5))
    ax1.plot(deltas, [r["mean_time_s"] for r in rows], "o-", color="tab:blue")
    ax1.set_xlabel(r"$\delta$")
    ax1.set_ylabel("mean time (s)", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(deltas, [r["mean_iters"] for r in rows], "s--", color="tab:red")
    ax2.set_ylabel("mean iterations", color="tab:red")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
