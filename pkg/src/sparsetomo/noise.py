"""Ideal and Poisson-corrupted projection data under a total-dose budget."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ParameterError
from .projector import Sinogram, SystemMatrix, forward_project


@dataclass(frozen=True)
class DoseSpec:
    """Total electron count ``total_counts`` collected over the whole tilt series."""

    total_counts: float
    seed: int = 0

    def __post_init__(self):
        if not (self.total_counts > 0 and np.isfinite(self.total_counts)):
            raise ParameterError(f"total_counts must be positive, got {self.total_counts}")


def simulate_ideal_data(A: SystemMatrix, x_true: np.ndarray) -> Sinogram:
    return forward_project(A, x_true)


def count_scale(b_clean: Sinogram, total_counts: float) -> float:
    """Counts per unit line integral, ``N_e / sum(b)``."""
    total = float(np.sum(b_clean.values))
    if not total > 0:
        raise ParameterError("clean data sums to zero; cannot distribute a dose")
    return total_counts / total


def apply_poisson_dose(b_clean: Sinogram, dose: DoseSpec) -> Sinogram:
    """Poisson counts proportional to the line integrals, rescaled back.

    With ``s = N_e / sum(b)`` each ray becomes ``Poisson(s * b_i) / s``, so the
    expected total count is exactly ``N_e`` and the data stay in line-integral
    units.
    """
    values = b_clean.values
    if np.any(values < 0):
        raise ParameterError("clean data must be non-negative")
    s = count_scale(b_clean, dose.total_counts)
    rng = np.random.default_rng(dose.seed)
    counts = rng.poisson(s * values)
    return Sinogram(counts / s, dose=float(dose.total_counts), noisy=True)


def expected_noise_norm(b_noisy: Sinogram) -> float:
    """Estimate of ``||b_noisy - b_clean||_2`` from the Poisson model alone.

    Each ray has variance ``b_i / s``, so the expected squared norm is
    ``sum(b) / s``; the noisy data stand in for the unknown clean sum.
    """
    if b_noisy.dose is None:
        raise ParameterError("sinogram carries no dose")
    total = float(np.sum(b_noisy.values))
    if total <= 0:
        return 0.0
    return total / np.sqrt(b_noisy.dose)


def measure_snr(b_clean: Sinogram, b_noisy: Sinogram) -> float:
    """``||b_clean|| / ||b_noisy - b_clean||``; ``inf`` for identical data."""
    if b_clean.values.shape != b_noisy.values.shape:
        raise ParameterError("sinogram shapes differ")
    err = np.linalg.norm(b_noisy.values - b_clean.values)
    if err == 0:
        return float("inf")
    return float(np.linalg.norm(b_clean.values) / err)
