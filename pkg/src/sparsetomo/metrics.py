"""Reconstruction error and sparsity measures shared by all studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ParameterError


@dataclass(frozen=True)
class RecoveryRule:
    """A reconstruction counts as recovered when its RMSE is at most the threshold."""

    rmse_threshold: float = 0.05

    def __post_init__(self):
        if not self.rmse_threshold > 0:
            raise ParameterError("rmse_threshold must be positive")


def _check_same_shape(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ParameterError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def rmse(x, x_ref) -> float:
    """Root-mean-square difference; zero only for identical images."""
    x, x_ref = _check_same_shape(x, x_ref)
    d = x - x_ref
    m = float(np.max(np.abs(d))) if d.size else 0.0
    if m == 0.0:
        return 0.0
    # scaling by the largest difference keeps tiny errors from underflowing
    return m * float(np.sqrt(np.mean((d / m) ** 2)))


def forward_differences(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences along columns and rows, zero on the last column/row.

    A zero last difference is what replicating the boundary pixel gives.
    """
    x = np.asarray(x, dtype=float)
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    gx[:, :-1] = x[:, 1:] - x[:, :-1]
    gy[:-1, :] = x[1:, :] - x[:-1, :]
    return gx, gy


def gradient_magnitude(x: np.ndarray) -> np.ndarray:
    gx, gy = forward_differences(x)
    return np.sqrt(gx * gx + gy * gy)


def pixel_sparsity(x: np.ndarray) -> float:
    """Fraction of pixels with ``|x| > 0`` (exact comparison, no epsilon)."""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    return float(np.count_nonzero(np.abs(x) > 0)) / x.size


def gradient_sparsity(x: np.ndarray) -> float:
    """Fraction of non-zero pixels in the gradient-magnitude image."""
    return pixel_sparsity(gradient_magnitude(x))


def is_recovered(x, x_ref, rule: RecoveryRule = RecoveryRule()) -> bool:
    return rmse(x, x_ref) <= rule.rmse_threshold
