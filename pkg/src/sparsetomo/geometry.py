"""Image grid, tilt schedules and parallel-beam detector layout.

Images are plain 2D ``numpy`` arrays of shape ``(height, width)`` stored
row-major; pixel ``(r, c)`` has flat index ``r * width + c``. The grid is
centred on the origin with unit pixels, so column ``c`` covers
``x in [c - width/2, c + 1 - width/2]`` and row ``r`` covers
``y in [r - height/2, r + 1 - height/2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """Raised when an argument violates an operation's precondition."""


@dataclass(frozen=True)
class TiltSchedule:
    """Evenly spaced projection angles over ``[-theta_max, theta_max)``.

    The upper endpoint is excluded, so a full-range schedule never holds both
    -90 and +90 degrees (identical parallel-beam ray sets).
    """

    theta_max: float
    n_proj: int

    def __post_init__(self):
        if not (0.0 < self.theta_max <= 90.0) or not math.isfinite(self.theta_max):
            raise ParameterError(f"theta_max must lie in (0, 90], got {self.theta_max}")
        if int(self.n_proj) != self.n_proj or self.n_proj < 1:
            raise ParameterError(f"n_proj must be a positive integer, got {self.n_proj}")

    @property
    def angles(self) -> np.ndarray:
        """Angles in degrees, ascending."""
        step = 2.0 * self.theta_max / self.n_proj
        return -self.theta_max + step * np.arange(self.n_proj, dtype=float)

    @property
    def angles_rad(self) -> np.ndarray:
        return np.deg2rad(self.angles)


def make_tilt_schedule(theta_max: float, n_proj: int) -> TiltSchedule:
    if int(n_proj) != n_proj:
        raise ParameterError(f"n_proj must be a positive integer, got {n_proj}")
    return TiltSchedule(float(theta_max), int(n_proj))


@dataclass(frozen=True)
class ProjectionGeometry:
    """Parallel-beam geometry: grid size, detector bins and tilt schedule.

    Detector bin ``k`` sits at offset ``s_k = k - (n_det - 1)/2`` along the
    detector axis ``(-sin phi, cos phi)``; its ray runs along
    ``(cos phi, sin phi)``. Bin spacing and pixel size are both 1.
    """

    width: int
    height: int
    n_det: int
    schedule: TiltSchedule

    def __post_init__(self):
        for name in ("width", "height", "n_det"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    @property
    def n_rays(self) -> int:
        return self.schedule.n_proj * self.n_det

    @property
    def detector_offsets(self) -> np.ndarray:
        return np.arange(self.n_det, dtype=float) - 0.5 * (self.n_det - 1)

    @classmethod
    def square(cls, size: int, theta_max: float = 90.0, n_proj: int = 1,
               n_det: int | None = None) -> "ProjectionGeometry":
        """Square grid with ``n_det`` defaulting to the grid side."""
        return cls(size, size, size if n_det is None else n_det,
                   make_tilt_schedule(theta_max, n_proj))


def sufficient_projection_number(width: int, height: int, n_det: int) -> int:
    """Counting bound ``ceil(width * height / n_det)`` on the projection count.

    A system with fewer rays than pixels cannot be full rank; this bound is
    used as the operational sufficient projection number.

    >>> sufficient_projection_number(512, 512, 1024)
    256
    """
    if width < 1 or height < 1 or n_det < 1:
        raise ParameterError("grid dimensions and n_det must be positive")
    return -(-(int(width) * int(height)) // int(n_det))


def relative_sampling(n_proj: int, width: int, height: int, n_det: int) -> float:
    """Relative sampling ``mu = n_proj / N_suff``."""
    return n_proj / sufficient_projection_number(width, height, n_det)


def projections_for_sampling(mu: float, width: int, height: int, n_det: int) -> int:
    """Projection count ``round(mu * N_suff)``, never below one."""
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    n_suff = sufficient_projection_number(width, height, n_det)
    # round-half-up so that e.g. mu=0.5 of an odd N_suff is reproducible
    return max(1, int(math.floor(mu * n_suff + 0.5)))
