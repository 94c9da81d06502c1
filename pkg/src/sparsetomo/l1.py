"""Basis pursuit and its noise-aware variant by primal-dual iteration.

Solves ``min ||x||_1  s.t.  ||A x - b||_2 <= eps`` (optionally with
``x >= 0``) with the Chambolle-Pock scheme. The data constraint enters as
the indicator of an l2 ball around ``b``, handled through its conjugate, so
``eps = 0`` (exact basis pursuit) and ``eps > 0`` share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ParameterError
from .projector import SystemMatrix, _as_data_vector, estimate_operator_norm
from .result import ReconResult


@dataclass(frozen=True)
class L1Options:
    epsilon: float = 0.0
    nonneg: bool = False
    max_iters: int = 20000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    seed: int = 0
    # primal step in image units; the dual step follows from ||A||
    tau: float = 0.05
    norm_iters: int = 100

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ParameterError("tolerances must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if not self.tau > 0:
            raise ParameterError("tau must be positive")


def _shrink(z, t, nonneg):
    if nonneg:
        return np.maximum(z - t, 0.0)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def solve_l1(A: SystemMatrix, b, opts: L1Options = L1Options(),
             norm: float | None = None) -> ReconResult:
    """Minimise ``||x||_1`` subject to ``||A x - b|| <= opts.epsilon``.

    Converged means the data misfit is within ``tol_primal * ||b||`` of the
    ball and the relative iterate change is below ``tol_dual``. ``norm``
    overrides the power-iteration estimate of ``||A||`` when a caller solves
    many problems with one matrix.
    """
    bvec = _as_data_vector(A, b)
    shape = A.geometry.shape
    eps = float(opts.epsilon)
    b_norm = float(np.linalg.norm(bvec))
    if b_norm <= eps:
        # zero image is feasible and has the least possible norm
        return ReconResult(np.zeros(shape), 0, b_norm, 0.0, True,
                           {"residual": np.zeros(0), "objective": np.zeros(0)})

    M = A.matrix
    MT = M.T.tocsr()
    L = estimate_operator_norm(A, opts.norm_iters, opts.seed) if norm is None else norm
    L *= 1.01  # power iteration approaches ||A|| from below
    tau = opts.tau
    sigma = 1.0 / (tau * L * L)

    x = np.zeros(M.shape[1])
    Ax = np.zeros(M.shape[0])
    Ax_bar = Ax
    y = np.zeros(M.shape[0])
    res_log = np.empty(opts.max_iters)
    obj_log = np.empty(opts.max_iters)
    converged = False
    feas_tol = opts.tol_primal * b_norm
    it = 0
    for it in range(1, opts.max_iters + 1):
        w = y + sigma * (Ax_bar - bvec)
        wn = np.linalg.norm(w)
        if wn <= sigma * eps:
            y = np.zeros_like(w)
        else:
            y = w * (1.0 - sigma * eps / wn)
        x_new = _shrink(x - tau * (MT @ y), tau, opts.nonneg)
        Ax_new = M @ x_new
        # extrapolation is linear, so A x_bar needs no extra product
        Ax_bar = 2.0 * Ax_new - Ax
        step = np.linalg.norm(x_new - x)
        x, Ax = x_new, Ax_new

        residual = float(np.linalg.norm(Ax - bvec))
        res_log[it - 1] = residual
        obj_log[it - 1] = np.abs(x).sum()
        if residual - eps <= feas_tol and step <= opts.tol_dual * max(np.linalg.norm(x), 1e-12):
            converged = True
            break

    return ReconResult(x.reshape(shape), it, res_log[it - 1], obj_log[it - 1], converged,
                       {"residual": res_log[:it].copy(), "objective": obj_log[:it].copy()})
