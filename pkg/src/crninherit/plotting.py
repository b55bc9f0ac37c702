"""SVG figures for trajectories, orbits and eps sweeps."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp keep the SVG output byte-for-byte reproducible
matplotlib.rcParams["svg.hashsalt"] = "crninherit"
_META = {"Date": None, "Creator": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def time_series(times, states, species: Sequence[str], path, columns: Sequence[int] | None = None,
                title: str | None = None) -> Path:
    """Concentrations against time, one line per selected species."""
    states = np.asarray(states)
    cols = range(states.shape[1]) if columns is None else columns
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in cols:
        ax.plot(times, states[:, j], lw=1, label=species[j])
    ax.set_xlabel("t")
    ax.set_ylabel("concentration")
    ax.legend(loc="upper right", frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def projection(states, i: int, j: int, species: Sequence[str], path, highlight=None, title: str | None = None) -> Path:
    """Two-coordinate projection; ``highlight`` overlays a refined orbit."""
    states = np.asarray(states)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(states[:, i], states[:, j], lw=0.8, color="0.6")
    if highlight is not None:
        h = np.asarray(highlight)
        ax.plot(np.r_[h[:, i], h[:1, i]], np.r_[h[:, j], h[:1, j]], lw=1.5, color="C3")
    ax.set_xlabel(species[i])
    ax.set_ylabel(species[j])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def sweep(eps: Sequence[float], distances: Sequence[float], path, title: str | None = None) -> Path:
    """Hausdorff distance to the base limit set against eps."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(eps, distances, "o-")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("Hausdorff distance (z coordinates)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
