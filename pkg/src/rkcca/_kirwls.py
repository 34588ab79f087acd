"""Shared KIRWLS engine.

Both the robust kernel mean and the robust kernel (cross-)covariance operator
minimize sum_i zeta(||A_i - sum_j w_j A_j||) over simplex weights w, where the
atoms A_i live in some Hilbert space with inner-product matrix M_ij = <A_i, A_j>.
For the mean problem M is the raw Gram matrix; for the tensor problem M is the
entrywise product of the two centered Gram matrices. Everything the iteration
needs reduces to M:

    e_i^2 = M_ii - 2 (M w)_i + w^T M w
    w_i  <- phi(e_i) / sum_b phi(e_b)
    J     = sum_i zeta(e_i)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import RobustLoss, resolve_loss
from .validation import NumericError

_NEG_TOL = 1e-8


def residuals_from_inner(m, w):
    """Residual norms e_i = ||A_i - sum_j w_j A_j|| from the inner-product matrix."""
    diag = np.diagonal(m)
    mw = m @ w
    e2 = diag - 2.0 * mw + float(w @ mw)
    scale = max(float(np.abs(diag).max(initial=0.0)), np.finfo(float).tiny)
    if e2.min() < -_NEG_TOL * scale:
        raise NumericError(
            f"negative squared residual {e2.min():.3e} (scale {scale:.3e}); "
            "inner-product matrix is not PSD"
        )
    return np.sqrt(np.clip(e2, 0.0, None))


@dataclass
class KirwlsResult:
    weights: np.ndarray
    residuals: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    loss: RobustLoss
    weight_sup_change: float


def kirwls(m, loss=None, tol=1e-8, max_iter=200, w_tol=1e-6) -> KirwlsResult:
    """Run KIRWLS on the inner-product matrix ``m``.

    Starts from uniform weights. ``loss=None`` resolves to Huber with cutoff
    equal to the median of the initial residuals, frozen for the run. Stops
    when the relative objective change drops below ``tol`` and the sup-norm
    weight change below ``w_tol`` (the objective rule alone, as commonly
    stated, does not bound the weight movement), or after ``max_iter``
    iterations with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = m.shape[0]
    w = np.full(n, 1.0 / n)
    e = residuals_from_inner(m, w)
    loss = resolve_loss(loss, e)
    objective = float(loss.zeta(e).sum())
    trace = [objective]
    converged = False
    sup_change = np.inf
    iterations = 0
    for _ in range(max_iter):
        phi = loss.phi(e)
        denom = float(phi.sum())
        if not denom > 0:
            raise NumericError("all points received zero weight (redescending loss)")
        w_new = phi / denom
        e = residuals_from_inner(m, w_new)
        new_objective = float(loss.zeta(e).sum())
        trace.append(new_objective)
        sup_change = float(np.abs(w_new - w).max())
        rel = abs(new_objective - objective) / max(objective, np.finfo(float).tiny)
        w = w_new
        objective = new_objective
        iterations += 1
        if rel < tol and sup_change < w_tol:
            converged = True
            break
    return KirwlsResult(
        weights=w,
        residuals=e,
        objective_trace=np.asarray(trace),
        iterations=iterations,
        converged=converged,
        loss=loss,
        weight_sup_change=sup_change,
    )
