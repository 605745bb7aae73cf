"""Render benchmark figures to files next to the CSV output.

Uses the Agg backend so figure rendering works headless; nothing here
opens a window.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchRecord
from .errors import InvalidConfig


def _grouped(records: list[BenchRecord], key: str) -> dict[int, list[BenchRecord]]:
    groups: dict[int, list[BenchRecord]] = {}
    for rec in records:
        if rec.error is None:
            groups.setdefault(getattr(rec, key), []).append(rec)
    return groups


def _errorbar(ax, xs, group: list[BenchRecord], label: str) -> None:
    group = sorted(group, key=lambda r: getattr(r, xs))
    ax.errorbar(
        [getattr(r, xs) for r in group],
        [r.mean_s for r in group],
        yerr=[r.ci_half_width_s for r in group],
        marker="o",
        capsize=3,
        label=label,
    )


def render_figures(records: list[BenchRecord], csv_path: str) -> list[str]:
    """Write runtime-vs-workers and runtime-vs-tiles PNGs beside csv_path.

    Returns the paths written. Groups with a single point still plot (as
    a lone marker with its confidence bar).
    """
    ok = [r for r in records if r.error is None]
    if not ok:
        raise InvalidConfig("no successful records to plot")
    base, _ = os.path.splitext(csv_path)
    title = f"{ok[0].operation}: n_train={ok[0].n_train}, n_test={ok[0].n_test}"
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for tiles, group in sorted(_grouped(ok, "tiles_per_dim").items()):
        _errorbar(ax, "worker_count", group, f"tiles={tiles}")
    ax.set_xlabel("workers")
    ax.set_ylabel("mean runtime [s]")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    path = f"{base}_workers.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for workers, group in sorted(_grouped(ok, "worker_count").items()):
        _errorbar(ax, "tiles_per_dim", group, f"workers={workers}")
    ax.set_xlabel("tiles per dimension")
    ax.set_ylabel("mean runtime [s]")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    path = f"{base}_tiles.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
