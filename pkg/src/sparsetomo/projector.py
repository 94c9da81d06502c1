"""Siddon-style system matrix, forward/back projection and norm estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from .geometry import ParameterError, ProjectionGeometry

# segments shorter than this are corner grazes and carry no length
_MIN_SEGMENT = 1e-12
_AXIS_SNAP = 1e-14


@njit(cache=True, nogil=True)
def _trace(angles, offsets, width, height):
    n_rays = angles.size * offsets.size
    cap = width + height + 2
    cols = np.empty((n_rays, cap), dtype=np.int64)
    vals = np.empty((n_rays, cap), dtype=np.float64)
    counts = np.zeros(n_rays, dtype=np.int64)
    xmin = -0.5 * width
    ymin = -0.5 * height
    ts = np.empty(cap + 2, dtype=np.float64)

    for a in range(angles.size):
        dx = np.cos(angles[a])
        dy = np.sin(angles[a])
        if abs(dx) < _AXIS_SNAP:
            dx = 0.0
        if abs(dy) < _AXIS_SNAP:
            dy = 0.0
        for k in range(offsets.size):
            ray = a * offsets.size + k
            ox = -offsets[k] * dy
            oy = offsets[k] * dx

            # entry/exit parameters; half-open slabs match the floor() lookup
            if dx == 0.0:
                if ox < xmin or ox >= -xmin:
                    continue
                tx0, tx1 = -np.inf, np.inf
            else:
                tx0 = (xmin - ox) / dx
                tx1 = (-xmin - ox) / dx
                if tx0 > tx1:
                    tx0, tx1 = tx1, tx0
            if dy == 0.0:
                if oy < ymin or oy >= -ymin:
                    continue
                ty0, ty1 = -np.inf, np.inf
            else:
                ty0 = (ymin - oy) / dy
                ty1 = (-ymin - oy) / dy
                if ty0 > ty1:
                    ty0, ty1 = ty1, ty0
            t0 = max(tx0, ty0)
            t1 = min(tx1, ty1)
            if t1 - t0 <= _MIN_SEGMENT:
                continue

            n = 0
            ts[n] = t0
            n += 1
            if dx != 0.0:
                for i in range(1, width):
                    t = (xmin + i - ox) / dx
                    if t0 < t < t1:
                        ts[n] = t
                        n += 1
            if dy != 0.0:
                for j in range(1, height):
                    t = (ymin + j - oy) / dy
                    if t0 < t < t1:
                        ts[n] = t
                        n += 1
            ts[n] = t1
            n += 1
            tsort = np.sort(ts[:n])

            m = 0
            last = -1
            for q in range(n - 1):
                seg = tsort[q + 1] - tsort[q]
                if seg <= _MIN_SEGMENT:
                    continue
                tm = 0.5 * (tsort[q + 1] + tsort[q])
                c = int(np.floor(ox + tm * dx - xmin))
                r = int(np.floor(oy + tm * dy - ymin))
                if c < 0 or c >= width or r < 0 or r >= height:
                    continue
                pix = r * width + c
                if pix == last:
                    vals[ray, m - 1] += seg
                else:
                    cols[ray, m] = pix
                    vals[ray, m] = seg
                    m += 1
                    last = pix
            counts[ray] = m

    indptr = np.zeros(n_rays + 1, dtype=np.int64)
    for i in range(n_rays):
        indptr[i + 1] = indptr[i] + counts[i]
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1], dtype=np.float64)
    for i in range(n_rays):
        s = indptr[i]
        for q in range(counts[i]):
            indices[s + q] = cols[i, q]
            data[s + q] = vals[i, q]
    return indptr, indices, data


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Sparse ray/pixel intersection-length matrix ``A``.

    Rows are ordered projection-major: ray ``p * n_det + k`` belongs to
    projection ``p`` and detector bin ``k``.
    """

    geometry: ProjectionGeometry
    matrix: sp.csr_matrix

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Pixel indices and intersection lengths of ray ``i``."""
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def dump_triplets(self, path) -> None:
        """Write ``row col length`` lines, for debugging only."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")


def build_system_matrix(geometry: ProjectionGeometry) -> SystemMatrix:
    """Exact intersection lengths by incremental ray traversal.

    Rays missing the grid give empty rows. A ray lying exactly on a pixel
    edge is assigned to the pixel on its positive side.
    """
    indptr, indices, data = _trace(
        geometry.schedule.angles_rad, geometry.detector_offsets,
        geometry.width, geometry.height)
    mat = sp.csr_matrix((data, indices.astype(np.int32), indptr.astype(np.int32)),
                        shape=(geometry.n_rays, geometry.n_pixels))
    mat.has_sorted_indices = False
    mat.sort_indices()
    return SystemMatrix(geometry, mat)


@dataclass(frozen=True)
class Sinogram:
    """Projection data ``b`` as an ``(n_proj, n_det)`` array.

    ``dose`` is the total electron count used to corrupt the data, ``None``
    for ideal data.
    """

    values: np.ndarray
    dose: float | None = None
    noisy: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ParameterError("sinogram values must be 2D (n_proj, n_det)")
        if not np.all(np.isfinite(values)):
            raise ParameterError("sinogram values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_proj(self) -> int:
        return self.values.shape[0]

    @property
    def n_det(self) -> int:
        return self.values.shape[1]

    def ravel(self) -> np.ndarray:
        return self.values.ravel()


def _as_data_vector(A: SystemMatrix, b) -> np.ndarray:
    vec = np.asarray(b.values if isinstance(b, Sinogram) else b, dtype=float).ravel()
    if vec.size != A.n_rows:
        raise ParameterError(f"data has {vec.size} entries, matrix has {A.n_rows} rows")
    return vec


def forward_project(A: SystemMatrix, x: np.ndarray) -> Sinogram:
    """Line integrals ``b = A x`` of image ``x``."""
    x = np.asarray(x, dtype=float)
    if x.size != A.n_cols:
        raise ParameterError(f"image has {x.size} pixels, matrix has {A.n_cols} columns")
    b = A.matrix @ x.ravel()
    return Sinogram(b.reshape(A.geometry.schedule.n_proj, A.geometry.n_det))


def back_project(A: SystemMatrix, b) -> np.ndarray:
    """Adjoint ``A^T b`` returned as an image of the geometry's shape."""
    vec = _as_data_vector(A, b)
    return (A.matrix.T @ vec).reshape(A.geometry.shape)


def estimate_operator_norm(A: SystemMatrix, iterations: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral norm ``||A||_2``.

    The estimate ``||A v_k||`` with ``v_k`` the normalised ``k``-th power
    iterate of ``A^T A`` never decreases with ``iterations``.
    """
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    M = A.matrix
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = M.T @ (M @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        estimate = float(np.linalg.norm(M @ v))
    return estimate
