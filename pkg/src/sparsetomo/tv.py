"""Constrained total-variation reconstruction by ASD-POCS.

Approximately solves ``min TV(x)  s.t.  ||A x - b||_2 <= eps, x >= 0`` by
alternating a relaxed ART sweep plus positivity (the POCS step) with a few
normalised steepest-descent steps on a smoothed TV, adapting both step
sizes as in Sidky & Pan (2008).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import ParameterError
from .metrics import forward_differences
from .projector import SystemMatrix, _as_data_vector
from .result import ReconResult


@dataclass(frozen=True)
class TvOptions:
    epsilon: float = 1e-5
    beta0: float = 1.0
    beta_red: float = 0.995
    n_tv_steps: int = 20
    alpha0: float = 0.2
    alpha_red: float = 0.95
    r_max: float = 0.95
    delta: float = 1e-8
    c_alpha_stop: float = -0.95
    resid_rel_stop: float = 1e-4
    # used in place of the relative residual rule when epsilon == 0
    resid_abs_stop: float = 1e-8
    max_iters: int = 10000
    debug: bool = False

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 < self.beta_red < 1:
            raise ParameterError("beta_red must lie in (0, 1)")
        if not 0 < self.alpha_red <= 1:
            raise ParameterError("alpha_red must lie in (0, 1]")
        if not self.delta > 0:
            raise ParameterError("delta must be positive")
        if self.n_tv_steps < 0 or self.max_iters < 1:
            raise ParameterError("n_tv_steps must be >= 0 and max_iters >= 1")


def tv_norm(x: np.ndarray, delta: float = 0.0) -> float:
    """Sum over pixels of ``sqrt(dx^2 + dy^2 + delta^2)``.

    Forward differences with a replicated boundary; ``delta = 0`` gives the
    exact isotropic TV.
    """
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    gx, gy = forward_differences(x)
    return float(np.sum(np.sqrt(gx * gx + gy * gy + delta * delta)))


def tv_gradient(x: np.ndarray, delta: float = 1e-8) -> np.ndarray:
    """Gradient of ``tv_norm(x, delta)`` with respect to the pixel values."""
    if not delta > 0:
        raise ParameterError("delta must be positive")
    gx, gy = forward_differences(x)
    mag = np.sqrt(gx * gx + gy * gy + delta * delta)
    px = gx / mag
    py = gy / mag
    # adjoint of the forward-difference operator
    grad = -px - py
    grad[:, 1:] += px[:, :-1]
    grad[1:, :] += py[:-1, :]
    return grad


def cosine_alpha(d_data: np.ndarray, d_tv: np.ndarray) -> float:
    """Cosine of the angle between two steps; 0 if either vanishes."""
    a = np.asarray(d_data, dtype=float).ravel()
    b = np.asarray(d_tv, dtype=float).ravel()
    if a.shape != b.shape:
        raise ParameterError("step shapes differ")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@njit(cache=True, nogil=True)
def _art_sweep(indptr, indices, data, row_norm2, b, x, beta):
    for i in range(indptr.size - 1):
        if row_norm2[i] == 0.0:
            continue
        lo, hi = indptr[i], indptr[i + 1]
        dot = 0.0
        for q in range(lo, hi):
            dot += data[q] * x[indices[q]]
        scale = beta * (b[i] - dot) / row_norm2[i]
        for q in range(lo, hi):
            x[indices[q]] += scale * data[q]


@njit(cache=True, nogil=True)
def _tv_descent(img, n_steps, step, delta):
    """``n_steps`` normalised steepest-descent steps on the smoothed TV, in place."""
    h, w = img.shape
    g = np.empty_like(img)
    d2 = delta * delta
    for _ in range(n_steps):
        g[:, :] = 0.0
        for r in range(h):
            for c in range(w):
                gx = img[r, c + 1] - img[r, c] if c + 1 < w else 0.0
                gy = img[r + 1, c] - img[r, c] if r + 1 < h else 0.0
                mag = np.sqrt(gx * gx + gy * gy + d2)
                px = gx / mag
                py = gy / mag
                g[r, c] -= px + py
                if c + 1 < w:
                    g[r, c + 1] += px
                if r + 1 < h:
                    g[r + 1, c] += py
        gn = np.sqrt(np.sum(g * g))
        if gn == 0.0:
            return
        scale = step / gn
        for r in range(h):
            for c in range(w):
                img[r, c] -= scale * g[r, c]


def art_sweep(A: SystemMatrix, b, x: np.ndarray, beta: float = 1.0) -> np.ndarray:
    """One Kaczmarz pass over all rays in index order; returns a new image."""
    bvec = _as_data_vector(A, b)
    M = A.matrix
    out = np.array(x, dtype=float).ravel().copy()
    row_norm2 = np.asarray(M.multiply(M).sum(axis=1)).ravel()
    _art_sweep(M.indptr, M.indices, M.data, row_norm2, bvec, out, beta)
    return out.reshape(A.geometry.shape)


def solve_tv_asdpocs(A: SystemMatrix, b, opts: TvOptions = TvOptions(),
                     x0: np.ndarray | None = None) -> ReconResult:
    """ASD-POCS reconstruction.

    Each outer iteration runs an ART sweep with relaxation ``beta`` and
    clips negatives (the POCS step, of size ``d_data``), then takes
    ``n_tv_steps`` normalised TV-descent steps and clips again (the TV step,
    of size ``d_tv``). The TV sub-step length is ``alpha`` times the size of
    the first POCS step; ``alpha`` shrinks by ``alpha_red`` whenever
    ``d_tv > r_max * d_data`` while the residual still exceeds ``epsilon``,
    or when the TV steps fail to lower the smoothed TV (overshoot), and
    ``beta`` shrinks by ``beta_red`` every iteration.

    Stops converged once ``c_alpha <= c_alpha_stop`` and the residual is
    within ``resid_rel_stop`` of ``epsilon`` (relative), or below
    ``resid_abs_stop`` when ``epsilon`` is 0. An exact fixed point, where
    neither step changes ``x``, satisfies the residual test alone.

    Diagnostics per iteration: ``residual`` (E(x) of the iterate after the
    TV steps), ``tv``, ``c_alpha``, ``beta``, ``alpha``, ``d_data``,
    ``d_tv`` and, in debug mode, ``tv_increases`` (sub-steps that raised the
    smoothed TV).
    """
    bvec = _as_data_vector(A, b)
    M = A.matrix
    shape = A.geometry.shape
    eps = float(opts.epsilon)
    row_norm2 = np.asarray(M.multiply(M).sum(axis=1)).ravel()
    indptr, indices, data = M.indptr, M.indices, M.data

    x = np.zeros(M.shape[1]) if x0 is None else np.array(x0, dtype=float).ravel().copy()
    if x.size != M.shape[1]:
        raise ParameterError("x0 has the wrong number of pixels")

    n = opts.max_iters
    names = ["residual", "tv", "c_alpha", "beta", "alpha", "d_data", "d_tv"]
    if opts.debug:
        names.append("tv_increases")
    log = {k: np.empty(n) for k in names}

    beta = opts.beta0
    alpha = opts.alpha0
    step_scale = None
    converged = False
    residual = float(np.linalg.norm(M @ x - bvec))
    it = 0
    for it in range(1, n + 1):
        x_prev = x.copy()
        _art_sweep(indptr, indices, data, row_norm2, bvec, x, beta)
        np.maximum(x, 0.0, out=x)
        x_pocs = x.copy()
        d_data_vec = x_pocs - x_prev
        d_data = float(np.linalg.norm(d_data_vec))
        if step_scale is None:
            step_scale = d_data

        img = x.reshape(shape)
        tv_pocs = tv_norm(img, opts.delta)
        step = alpha * step_scale
        increases = 0
        if opts.debug:
            for _ in range(opts.n_tv_steps):
                before = tv_norm(img, opts.delta)
                _tv_descent(img, 1, step, opts.delta)
                increases += tv_norm(img, opts.delta) > before
        elif step > 0:
            _tv_descent(img, opts.n_tv_steps, step, opts.delta)
        # TV steps may dip below zero; positivity is one of the convex sets
        np.maximum(x, 0.0, out=x)
        d_tv_vec = x - x_pocs
        d_tv = float(np.linalg.norm(d_tv_vec))
        residual = float(np.linalg.norm(M @ x - bvec))
        c_alpha = cosine_alpha(d_data_vec, d_tv_vec)
        tv_now = tv_norm(img)
        # the TV step overshot if it failed to lower the smoothed TV
        overshoot = d_tv > 0 and tv_norm(img, opts.delta) >= tv_pocs

        i = it - 1
        log["residual"][i] = residual
        log["tv"][i] = tv_now
        log["c_alpha"][i] = c_alpha
        log["beta"][i] = beta
        log["alpha"][i] = alpha
        log["d_data"][i] = d_data
        log["d_tv"][i] = d_tv
        if opts.debug:
            log["tv_increases"][i] = increases

        # shrink the TV step when it outweighs the data step while the data
        # are still unmatched, or when it overshoots
        if (d_tv > opts.r_max * d_data and residual > eps) or overshoot:
            alpha *= opts.alpha_red
        beta *= opts.beta_red

        if eps > 0:
            resid_ok = abs(residual - eps) / eps <= opts.resid_rel_stop
        else:
            resid_ok = residual <= opts.resid_abs_stop
        # a fixed point (neither step moves x) also ends the run
        stalled = d_data == 0.0 and d_tv == 0.0
        if resid_ok and (c_alpha <= opts.c_alpha_stop or stalled):
            converged = True
            break

    diagnostics = {k: v[:it].copy() for k, v in log.items()}
    image = x.reshape(shape)
    return ReconResult(image, it, residual, tv_norm(image), converged, diagnostics)
