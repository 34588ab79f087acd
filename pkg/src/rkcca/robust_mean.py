"""Robust kernel mean element via kernelized IRWLS.

The empirical kernel mean minimizes sum_i ||Phi(X_i) - f||^2; replacing the
squared norm by a robust loss and iterating normalized weights
phi(e_i) / sum_b phi(e_b) yields a weighted mean sum_i w_i Phi(X_i) that
down-weights outlying feature vectors. The weight vector is what downstream
robust centering consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kirwls import kirwls, residuals_from_inner
from .losses import RobustLoss
from .validation import check_symmetric


@dataclass
class RobustMeanFit:
    """Result of a robust kernel mean fit."""

    weights: np.ndarray
    residuals: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    loss: RobustLoss
    weight_sup_change: float


def mean_residuals(k, w) -> np.ndarray:
    """Residual norms ||Phi(X_i) - sum_j w_j Phi(X_j)|| computed from the Gram matrix."""
    k = check_symmetric(k, "K")
    return residuals_from_inner(k, np.asarray(w, dtype=float))


def fit_robust_mean(k, loss=None, tol=1e-8, max_iter=200, w_tol=1e-6) -> RobustMeanFit:
    """Fit the robust kernel mean on a raw (uncentered) Gram matrix.

    Parameters
    ----------
    k : (n, n) array
        Symmetric PSD Gram matrix of the sample.
    loss : RobustLoss or None
        ``None`` uses Huber with cutoff equal to the median of the initial
        (uniform-weight) residuals, frozen for the run.
    tol, max_iter, w_tol
        Stopping controls; see :func:`rkcca._kirwls.kirwls`.

    Returns
    -------
    RobustMeanFit
        ``weights`` is the simplex vector w with the robust mean
        sum_i w_i Phi(X_i); ``objective_trace`` is non-increasing.
    """
    k = check_symmetric(k, "K")
    res = kirwls(k, loss=loss, tol=tol, max_iter=max_iter, w_tol=w_tol)
    return RobustMeanFit(
        weights=res.weights,
        residuals=res.residuals,
        objective_trace=res.objective_trace,
        iterations=res.iterations,
        converged=res.converged,
        loss=res.loss,
        weight_sup_change=res.weight_sup_change,
    )
