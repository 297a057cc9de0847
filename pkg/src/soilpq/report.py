"""Figure rendering for sweep and Pareto reports (written next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")  # headless; must precede pyplot import

import matplotlib.pyplot as plt

from .errors import EmptyGrid, IoError
from .sweep import ParetoPoint, SweepRecord

_MARKERS = ["o", "s", "^", "D", "v", "P", "X", "*"]


def plot_sweep(records: list[SweepRecord], path) -> None:
    """Two stacked panels: compute time (top) and round-trip error (bottom) vs K."""
    usable = [r for r in records if r.status == "ok"]
    if not usable:
        raise EmptyGrid("no measured records to plot")
    fig, (ax_time, ax_err) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    m_values = sorted({r.M for r in usable})
    for i, m in enumerate(m_values):
        rows = sorted((r for r in usable if r.M == m), key=lambda r: r.K)
        ks = [r.K for r in rows]
        marker = _MARKERS[i % len(_MARKERS)]
        ax_time.plot(ks, [r.train_seconds for r in rows], marker=marker,
                     label=f"M={m} train")
        ax_time.plot(ks, [r.encode_seconds for r in rows], marker=marker,
                     linestyle="--", alpha=0.6, label=f"M={m} encode")
        ax_err.plot(ks, [r.rmse for r in rows], marker=marker, label=f"M={m}")
    ax_time.set_ylabel("seconds")
    ax_time.set_title("compute time vs centroids per subspace")
    ax_time.legend(fontsize=8)
    ax_err.set_xscale("log", base=2)
    ax_err.set_xlabel("K (centroids per subspace)")
    ax_err.set_ylabel("reconstruction RMSE")
    ax_err.set_title("round-trip error vs centroids per subspace")
    ax_err.legend(fontsize=8)
    for ax in (ax_time, ax_err):
        ax.grid(True, alpha=0.3)
    _save(fig, path)


def plot_pareto(points: list[ParetoPoint], path) -> None:
    """Error/time trade-off scatter with the non-dominated front highlighted."""
    if not points:
        raise EmptyGrid("no points to plot")
    fig, ax = plt.subplots(figsize=(7, 5))
    dom = [p for p in points if p.dominated]
    front = [p for p in points if not p.dominated]
    if dom:
        ax.scatter([p.record.train_seconds for p in dom], [p.record.mse for p in dom],
                   color="0.6", label="dominated")
    front_sorted = sorted(front, key=lambda p: p.record.mse)
    ax.plot([p.record.train_seconds for p in front_sorted],
            [p.record.mse for p in front_sorted],
            "o-", color="crimson", label="Pareto front")
    for p in points:
        ax.annotate(f"M={p.record.M},K={p.record.K}",
                    (p.record.train_seconds, p.record.mse),
                    textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlabel("training time (s)")
    ax.set_ylabel("reconstruction MSE")
    ax.set_title("error/time trade-off")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def _save(fig, path) -> None:
    try:
        fig.tight_layout()
        fig.savefig(path, dpi=150)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
