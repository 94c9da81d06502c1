"""Test objects: pixel-sparse disc phantoms and a Pt/C catalyst-like phantom."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import ParameterError
from .metrics import gradient_magnitude, pixel_sparsity

__all__ = [
    "GenerationError",
    "PhantomSpec",
    "PtcLayers",
    "generate",
    "generate_pixel_sparse",
    "generate_ptc_like",
    "pixel_sparsity",
]


class GenerationError(RuntimeError):
    """The generator could not reach its target statistics."""


@dataclass(frozen=True)
class PhantomSpec:
    kind: str = "ptc-like"
    size: tuple[int, int] = (256, 256)
    k_target: float = 0.1
    seed: int = 0
    carbon_level: float = 0.03
    particle_level: float = 0.75
    grad_target: float = 0.033
    grad_tol: float = 0.01
    n_particles: tuple[int, int] = (10, 30)
    max_retries: int = 50

    def __post_init__(self):
        size = self.size
        if np.isscalar(size):
            size = (int(size), int(size))
        object.__setattr__(self, "size", tuple(int(s) for s in size))
        if self.kind not in ("pixel-sparse", "ptc-like"):
            raise ParameterError(f"unknown phantom kind {self.kind!r}")
        if min(self.size) < 1:
            raise ParameterError("phantom size must be positive")
        if not (0.0 < self.k_target <= 1.0):
            raise ParameterError(f"k_target must lie in (0, 1], got {self.k_target}")
        if self.kind == "ptc-like" and min(self.size) < 16:
            raise ParameterError("ptc-like phantoms need at least 16x16 pixels")
        lo, hi = self.n_particles
        if lo < 0 or hi < lo:
            raise ParameterError("n_particles must be an increasing pair of counts")


def _disc(shape, cy, cx, radius):
    """Boolean mask of pixels whose centres lie within ``radius`` of (cy, cx)."""
    h, w = shape
    r0 = max(int(np.floor(cy - radius)), 0)
    r1 = min(int(np.ceil(cy + radius)) + 1, h)
    c0 = max(int(np.floor(cx - radius)), 0)
    c1 = min(int(np.ceil(cx + radius)) + 1, w)
    mask = np.zeros(shape, dtype=bool)
    if r0 >= r1 or c0 >= c1:
        return mask
    yy, xx = np.mgrid[r0:r1, c0:c1]
    mask[r0:r1, c0:c1] = (yy + 0.5 - cy) ** 2 + (xx + 0.5 - cx) ** 2 <= radius * radius
    return mask


def generate_pixel_sparse(spec: PhantomSpec) -> np.ndarray:
    """Union of random discs with exactly ``round(k_target * N)`` non-zero pixels.

    Discs have uniform random centres, radii in ``[1, size/8]`` and
    intensities in ``[0.2, 1]``; later discs paint over earlier ones. Once
    random discs stop fitting under the target count, the support is grown
    by small discs seeded on uncovered pixels next to it, which keeps the
    support clustered and lands the count exactly.
    """
    if spec.kind != "pixel-sparse":
        raise ParameterError("spec.kind must be 'pixel-sparse'")
    shape = spec.size
    n_pix = shape[0] * shape[1]
    target = max(1, int(np.floor(spec.k_target * n_pix + 0.5)))
    r_max = max(1.0, min(shape) / 8.0)
    rng = np.random.default_rng(spec.seed)
    x = np.zeros(shape)
    covered = np.zeros(shape, dtype=bool)
    count = 0

    misses = 0
    while count < target and misses < 20:
        cy, cx = rng.uniform(0, shape[0]), rng.uniform(0, shape[1])
        disc = _disc(shape, cy, cx, rng.uniform(1.0, r_max))
        value = rng.uniform(0.2, 1.0)
        new = np.count_nonzero(disc & ~covered)
        if new == 0 or count + new > target:
            misses += 1
            continue
        misses = 0
        x[disc] = value
        covered |= disc
        count += new

    budget = 10 * n_pix
    while count < target:
        budget -= 1
        if budget < 0:
            raise GenerationError(f"could not reach k_target={spec.k_target}")
        frontier = ndimage.binary_dilation(covered) & ~covered
        pool = np.flatnonzero(frontier if frontier.any() else ~covered)
        seed_pix = pool[rng.integers(pool.size)]
        cy, cx = divmod(int(seed_pix), shape[1])
        radius = rng.uniform(0.5, r_max)
        value = rng.uniform(0.2, 1.0)
        while True:
            disc = _disc(shape, cy + 0.5, cx + 0.5, radius)
            new = np.count_nonzero(disc & ~covered)
            if count + new <= target:
                break
            radius *= 0.5
        # paint only fresh pixels so that shrinking discs never recolour support
        fresh = disc & ~covered
        x[fresh] = value
        covered |= fresh
        count += new
    return x


@dataclass
class PtcLayers:
    """A Pt/C-like phantom with the masks it was built from."""

    image: np.ndarray
    support: np.ndarray
    particles: np.ndarray
    pores: np.ndarray = field(repr=False)


def _random_blob(shape, rng, radius):
    """Star-shaped blob with a smooth random radial profile."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    dy = yy + 0.5 - h / 2.0 - rng.uniform(-0.03, 0.03) * h
    dx = xx + 0.5 - w / 2.0 - rng.uniform(-0.03, 0.03) * w
    ang = np.arctan2(dy, dx)
    prof = np.ones_like(ang)
    for m in range(2, 6):
        prof += rng.uniform(0.0, 0.12 / (m - 1)) * np.cos(m * ang + rng.uniform(0, 2 * np.pi))
    return np.hypot(dy, dx) <= radius * prof


def _ptc_once(spec, rng):
    shape = spec.size
    n = min(shape)
    n_pix = shape[0] * shape[1]
    lo = spec.grad_target - spec.grad_tol
    hi = spec.grad_target + spec.grad_tol

    support = _random_blob(shape, rng, 0.36 * n)
    interior = ndimage.binary_erosion(support, iterations=2)
    if not interior.any():
        return None

    particles = np.zeros(shape, dtype=bool)
    p_min, p_max = max(1.0, 0.008 * n), max(1.5, 0.016 * n)
    n_part = int(rng.integers(spec.n_particles[0], spec.n_particles[1] + 1))
    placed = 0
    for _ in range(50 * max(n_part, 1)):
        if placed == n_part:
            break
        radius = rng.uniform(p_min, p_max)
        cy, cx = rng.uniform(0, shape[0]), rng.uniform(0, shape[1])
        disc = _disc(shape, cy, cx, radius)
        # particles sit on the support and do not touch each other
        if not disc.any() or np.any(disc & ~interior):
            continue
        if np.any(ndimage.binary_dilation(disc, iterations=2) & particles):
            continue
        particles |= disc
        placed += 1
    if placed < n_part:
        return None

    def compose(pores):
        img = np.zeros(shape)
        img[support & ~pores] = spec.carbon_level
        img[particles] = spec.particle_level
        return img

    pores = np.zeros(shape, dtype=bool)
    keepout = ndimage.binary_dilation(particles, iterations=2)
    img = compose(pores)
    frac = np.count_nonzero(gradient_magnitude(img)) / n_pix
    if frac > hi:
        return None
    r_lo, r_hi = max(1.0, 0.015 * n), max(1.5, 0.04 * n)
    misses = 0
    while frac < spec.grad_target and misses < 200:
        radius = rng.uniform(r_lo, r_hi)
        disc = _disc(shape, rng.uniform(0, shape[0]), rng.uniform(0, shape[1]), radius)
        if not disc.any() or np.any(disc & ~interior) or np.any(disc & keepout):
            misses += 1
            continue
        trial = pores | disc
        trial_img = compose(trial)
        trial_frac = np.count_nonzero(gradient_magnitude(trial_img)) / n_pix
        if trial_frac > hi:
            misses += 1
            continue
        pores, img, frac = trial, trial_img, trial_frac
    if not (lo <= frac <= hi):
        return None
    return PtcLayers(img, support & ~pores, particles, pores)


def generate_ptc_like(spec: PhantomSpec, return_layers: bool = False):
    """Piecewise-constant catalyst-like phantom.

    A random blob of carbon support (``carbon_level``) is perforated by
    pores and decorated with small particle discs (``particle_level``)
    lying entirely on the support. Pores are added until the fraction of
    pixels with non-zero gradient magnitude lies within ``grad_tol`` of
    ``grad_target``.

    Parameters
    ----------
    spec : PhantomSpec
        Must have ``kind == "ptc-like"``.
    return_layers : bool
        Return a :class:`PtcLayers` with the support and particle masks
        instead of just the image.
    """
    if spec.kind != "ptc-like":
        raise ParameterError("spec.kind must be 'ptc-like'")
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.max_retries):
        layers = _ptc_once(spec, rng)
        if layers is not None:
            return layers if return_layers else layers.image
    raise GenerationError(
        f"gradient sparsity {spec.grad_target:.3f}+-{spec.grad_tol:.3f} unreachable "
        f"for a {spec.size[0]}x{spec.size[1]} ptc-like phantom")


def generate(spec: PhantomSpec) -> np.ndarray:
    if spec.kind == "pixel-sparse":
        return generate_pixel_sparse(spec)
    return generate_ptc_like(spec)
