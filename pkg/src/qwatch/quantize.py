"""Per-sensor quantile quantization of scaled values.

A fitted Quantizer holds n_q - 1 interior cut points (the empirical k/n_q
quantiles of the training values, linear-interpolation convention) and maps a
real to one of n_q ordered levels. Intervals are left-open / right-closed:
values at or below the first cut map to level 0, values above the last cut map
to level n_q - 1, and ties at a cut point go to the lower level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Quantizer:
    """Immutable n_q-level quantizer defined by sorted interior cut points."""

    cut_points: np.ndarray
    n_q: int

    def __post_init__(self) -> None:
        cuts = np.asarray(self.cut_points, dtype=float)
        if self.n_q < 2:
            raise ValueError(f"n_q must be >= 2, got {self.n_q}")
        if cuts.shape != (self.n_q - 1,):
            raise ValueError(
                f"expected {self.n_q - 1} cut points, got shape {cuts.shape}"
            )
        if np.any(np.diff(cuts) < 0):
            raise ValueError("cut points must be non-decreasing")
        cuts.setflags(write=False)
        object.__setattr__(self, "cut_points", cuts)


def fit_quantizer(scaled_values: np.ndarray, n_q: int) -> Quantizer:
    """Fit cut points as the empirical k/n_q quantiles, k = 1..n_q-1.

    Args:
        scaled_values: Non-empty 1D training values (already scaled).
        n_q: Number of output levels, >= 2.
    """
    values = np.asarray(scaled_values, dtype=float)
    if values.ndim != 1 or len(values) == 0:
        raise ValueError("scaled_values must be a non-empty 1D sequence")
    if n_q < 2:
        raise ValueError(f"n_q must be >= 2, got {n_q}")
    probs = np.arange(1, n_q) / n_q
    cuts = np.quantile(values, probs, method="linear")
    return Quantizer(cuts, n_q)


def quantize(quantizer: Quantizer, x: float) -> int:
    """Map one real to its level: the count of cut points strictly below x."""
    if np.isnan(x):
        raise ValueError("cannot quantize NaN")
    return int(np.searchsorted(quantizer.cut_points, x, side="left"))


def quantize_series(quantizer: Quantizer, xs: np.ndarray) -> np.ndarray:
    """Elementwise :func:`quantize`; returns int64 levels."""
    values = np.asarray(xs, dtype=float)
    if np.isnan(values).any():
        raise ValueError("cannot quantize NaN")
    return np.searchsorted(quantizer.cut_points, values, side="left").astype(np.int64)
