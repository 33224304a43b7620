"""Figure rendering for reports and scans (written alongside the data files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

__all__ = ["render_correlator_figure", "render_scan_figure"]

_PAIR_LABELS = {"ab": "(a, b)", "ab_prime": "(a, b')", "aprime_b": "(a', b)",
                "aprime_bprime": "(a', b')"}
_PAIR_KEYS = ("ab", "ab_prime", "aprime_b", "aprime_bprime")


def render_correlator_figure(report: dict, path: str | Path) -> None:
    """Per-pair correlators (estimate ± se where present) against the oracle."""
    x = range(4)
    oracle = [report["pairs"][k]["oracle"]["correlator"] for k in _PAIR_KEYS]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, oracle, "s", color="tab:orange", markersize=9, fillstyle="none",
            label="oracle", zorder=3)

    have_estimates = all(report["pairs"][k]["correlator_from_cells"] for k in _PAIR_KEYS)
    if have_estimates:
        est = [report["pairs"][k]["correlator_from_cells"]["value"] for k in _PAIR_KEYS]
        se = [report["pairs"][k]["correlator_from_cells"]["se"] for k in _PAIR_KEYS]
        ax.errorbar(x, est, yerr=[4 * s for s in se], fmt="o", color="tab:blue",
                    capsize=4, label="Monte Carlo (±4σ)", zorder=4)

    ax.axhline(0.0, color="0.8", linewidth=0.8)
    ax.set_xticks(list(x))
    ax.set_xticklabels([_PAIR_LABELS[k] for k in _PAIR_KEYS])
    ax.set_ylabel("correlator E")
    ax.set_ylim(-1.05, 1.05)
    c = report["chsh"]
    if c["s"] is not None:
        title = f"S' = {c['s']:.4f} ± {c['se']:.4f}   (oracle {c['oracle_s']:.4f})"
    else:
        title = f"oracle S' = {c['oracle_s']:.4f}"
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_scan_figure(rows: list[dict], param: str, path: str | Path) -> None:
    """Oracle curve and MC points for one offset sweep, with the S = 2 line."""
    values = [r["value"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(values, [r["oracle_sprime"] for r in rows], "-", color="tab:orange",
            label="oracle")
    ax.errorbar(values, [r["mc_sprime"] for r in rows],
                yerr=[4 * r["mc_se"] for r in rows], fmt="o", color="tab:blue",
                capsize=3, label="Monte Carlo (±4σ)")
    ax.axhline(2.0, color="0.4", linestyle="--", linewidth=1.0, label="S = 2")
    ax.set_xlabel(f"{param} (rad)")
    ax.set_ylabel("S'")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
