"""Distances between marginal distributions."""

from __future__ import annotations

import numpy as np

from .marginals import BIN_DAYS


def _masses(x) -> np.ndarray:
    return np.asarray(getattr(x, "masses", x), dtype=np.float64)


def emd(p, q, spacing: float | None = None) -> float:
    """1-D earth mover's distance on a shared unit-spaced (or ``spacing``) grid.

    Rate distributions are compared in count units; time distributions in
    days. Supports of different length are zero-padded.
    """
    if spacing is None:
        spacing = BIN_DAYS if _is_time(p) or _is_time(q) else 1.0
    a, b = _masses(p), _masses(q)
    n = max(len(a), len(b))
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    return float(np.abs(np.cumsum(a - b)).sum() * spacing)


def l1_bivariate(p, q) -> float:
    """Sum of absolute mass differences over the grid, in [0, 2]."""
    a, b = _masses(p), _masses(q)
    if a.shape != b.shape:
        raise ValueError(f"grids differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def _is_time(x) -> bool:
    return type(x).__name__ == "TimeDistribution"
