"""Standard and robust kernel (cross-)covariance operators.

Operators are represented by a simplex weight vector w over per-sample tensor
terms: Sigma = sum_i w_i * Phi~(X_i) (x) Phi~(Y_i), where Phi~ are centered
feature maps. The Gram matrix of the tensor atoms is the entrywise (Hadamard)
product of the two centered Gram matrices, so every Hilbert-Schmidt quantity
in the iteration reduces to n x n algebra; the n^2 x n tensor layout is never
materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kirwls import kirwls, residuals_from_inner
from .losses import RobustLoss
from .validation import check_symmetric

CO = "co"
CCO = "cco"


@dataclass
class CovOperatorFit:
    """A fitted (cross-)covariance operator in weight representation."""

    weights: np.ndarray
    residuals: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    kind: str
    loss: RobustLoss
    weight_sup_change: float
    centering_weights_x: np.ndarray | None = None
    centering_weights_y: np.ndarray | None = None


def standard_cco_weights(n: int) -> np.ndarray:
    """Uniform 1/n weights: the empirical (non-robust) operator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.full(n, 1.0 / n)


def tensor_inner(kx_centered, ky_centered) -> np.ndarray:
    """Inner-product matrix of the tensor atoms: entrywise product of the Grams."""
    kx = check_symmetric(kx_centered, "K_x")
    ky = check_symmetric(ky_centered, "K_y")
    if kx.shape != ky.shape:
        raise ValueError(f"shape mismatch: {kx.shape} vs {ky.shape}")
    return kx * ky


def residual_vector(kx_centered, ky_centered, w) -> np.ndarray:
    """Distances e_i = ||Phi~(X_i)(x)Phi~(Y_i) - sum_j w_j Phi~(X_j)(x)Phi~(Y_j)||.

    With M the entrywise product of the centered Grams,
    e_i^2 = M_ii - 2 (M w)_i + w^T M w.
    """
    m = tensor_inner(kx_centered, ky_centered)
    return residuals_from_inner(m, np.asarray(w, dtype=float))


def fit_robust_cov(
    kx_centered,
    ky_centered,
    loss=None,
    tol=1e-8,
    max_iter=200,
    w_tol=1e-6,
    centering_weights_x=None,
    centering_weights_y=None,
) -> CovOperatorFit:
    """Fit a robust kernel CO/CCO by KIRWLS on centered Gram matrices.

    Passing the same matrix for both views fits the covariance operator (CO);
    otherwise the cross-covariance operator (CCO). The centered Grams should
    be produced by :func:`rkcca.kernels.center`, typically with robust-mean
    weights; the optional centering weight vectors are recorded for
    bookkeeping only.
    """
    same = kx_centered is ky_centered or np.array_equal(kx_centered, ky_centered)
    m = tensor_inner(kx_centered, ky_centered)
    res = kirwls(m, loss=loss, tol=tol, max_iter=max_iter, w_tol=w_tol)
    return CovOperatorFit(
        weights=res.weights,
        residuals=res.residuals,
        objective_trace=res.objective_trace,
        iterations=res.iterations,
        converged=res.converged,
        kind=CO if same else CCO,
        loss=res.loss,
        weight_sup_change=res.weight_sup_change,
        centering_weights_x=None if centering_weights_x is None else np.asarray(centering_weights_x, dtype=float),
        centering_weights_y=None if centering_weights_y is None else np.asarray(centering_weights_y, dtype=float),
    )


def operator_matrix(kx_centered, ky_centered, w) -> np.ndarray:
    """Sample-dual n x n realization of the weighted operator: K_x diag(w) K_y."""
    kx = np.asarray(kx_centered, dtype=float)
    ky = np.asarray(ky_centered, dtype=float)
    w = np.asarray(w, dtype=float)
    return kx @ (w[:, None] * ky)


def hs_distance_sq(w_a, w_b, kx_aa, ky_aa, kx_ab, ky_ab, kx_bb, ky_bb) -> float:
    """Squared HS distance between two weighted operators over two sample sets.

    ||Sigma_a - Sigma_b||^2 expands over cross-Gram blocks as
    w_a^T (Kx_aa o Ky_aa) w_a - 2 w_a^T (Kx_ab o Ky_ab) w_b
    + w_b^T (Kx_bb o Ky_bb) w_b, with o the entrywise product. Tiny negative
    round-off is clipped to zero.
    """
    w_a = np.asarray(w_a, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    kx_ab = np.asarray(kx_ab, dtype=float)
    ky_ab = np.asarray(ky_ab, dtype=float)
    if kx_ab.shape != (w_a.size, w_b.size) or ky_ab.shape != kx_ab.shape:
        raise ValueError("cross blocks must be (len(w_a), len(w_b))")
    m_aa = tensor_inner(kx_aa, ky_aa)
    m_bb = tensor_inner(kx_bb, ky_bb)
    if m_aa.shape[0] != w_a.size or m_bb.shape[0] != w_b.size:
        raise ValueError("diagonal blocks do not match the weight lengths")
    value = (
        float(w_a @ m_aa @ w_a)
        - 2.0 * float(w_a @ (kx_ab * ky_ab) @ w_b)
        + float(w_b @ m_bb @ w_b)
    )
    return max(value, 0.0)
