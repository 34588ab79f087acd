"""Standard, weighted, and robust kernel canonical correlation analysis.

The fit solves the dual problem: maximize a^T G_x W_xy G_y b subject to
a^T (G_x W_xx G_x + kappa G_x) a = 1 and the analogous Y constraint, where the
G's are (weighted-)centered Gram matrices and the W's are diagonal weight
matrices (all uniform 1/n for the standard fit; KIRWLS weights for the robust
fit). Writing A_x and A_y for the constraint matrices, the solution is the
SVD of R = A_x^{-1/2} (G_x W_xy G_y) A_y^{-1/2}: singular values are the
canonical correlations and the back-transformed singular vectors the dual
coefficient vectors. This whitened form matches the regularized correlation-
operator formulation; the generalized-eigenproblem variant with the inner
-1/2 exponent as sometimes written is available as formulation="printed".
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .kernels import center, center_test, uniform_weights
from .losses import RobustLoss
from .robust_cov import fit_robust_cov
from .robust_mean import fit_robust_mean
from .validation import NumericError, check_simplex, check_symmetric

_RHO_EXCURSION = 1e-6


def _inv_sqrt_spd(a):
    """Inverse square root of a symmetric positive definite matrix."""
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    if vals.size == 0 or vals.min() <= 0.0:
        raise NumericError("constraint matrix is not positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


class _ViewBasis:
    """Rank-reduced eigenbasis of one view's centered Gram matrix.

    Writing G = U_+ diag(lam) U_+^T over the numerically positive spectrum and
    parameterizing dual vectors as a = U_+ diag(lam^-1/2) c turns the
    constraint a^T (G W G + kappa G) a into c^T (Phi^T Phi + kappa I) c with
    the bounded factor Phi = W^{1/2} U_+ diag(lam^{1/2}). All whitening then
    happens on well-conditioned r x r matrices; no inverse ever touches the
    near-null Gram directions.
    """

    def __init__(self, g, weights, kappa, rel_floor=1e-10):
        vals, vecs = np.linalg.eigh(0.5 * (g + g.T))
        top = float(vals.max(initial=0.0))
        if top <= 0.0:
            raise NumericError("centered Gram matrix has no positive eigenvalue")
        keep = vals > rel_floor * top
        lam = vals[keep]
        self.basis = vecs[:, keep] * np.sqrt(lam)  # U_+ diag(lam^{1/2}), n x r
        self.coeff_map = vecs[:, keep] / np.sqrt(lam)  # U_+ diag(lam^{-1/2})
        # simplex validation tolerates -1e-9; keep sqrt real
        phi = np.sqrt(np.clip(weights, 0.0, None))[:, None] * self.basis
        a_tilde = phi.T @ phi + kappa * np.eye(lam.size)
        self.whitener = _inv_sqrt_spd(a_tilde)  # a_tilde^{-1/2}, r x r

    @property
    def rank(self):
        return self.basis.shape[1]


def _fix_signs(alpha_x, alpha_y):
    # deterministic convention: first non-negligible coefficient of each
    # alpha_x column is positive; the paired alpha_y column flips with it
    for j in range(alpha_x.shape[1]):
        col = alpha_x[:, j]
        scale = np.abs(col).max()
        if scale <= 0:
            continue
        nz = np.nonzero(np.abs(col) > 1e-12 * scale)[0]
        if nz.size and col[nz[0]] < 0:
            alpha_x[:, j] = -col
            alpha_y[:, j] = -alpha_y[:, j]
    return alpha_x, alpha_y


@dataclass
class CcaModel:
    """A fitted kernel CCA model in the dual (Gram) representation.

    ``rho`` holds the full descending spectrum and ``alpha_x``/``alpha_y`` all
    dual coefficient columns (the influence formulas need the whole frame);
    ``m`` records how many leading components were requested. Columns are
    normalized to a^T (G W G + kappa G) a = 1 with a deterministic sign.
    """

    rho: np.ndarray
    alpha_x: np.ndarray
    alpha_y: np.ndarray
    kappa: float
    m: int
    center_wx: np.ndarray
    center_wy: np.ndarray
    weights_xx: np.ndarray
    weights_yy: np.ndarray
    weights_xy: np.ndarray
    rho_raw: np.ndarray | None = None
    method: str = "standard"
    formulation: str = "operator"
    converged: bool = True
    loss: RobustLoss | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.alpha_x.shape[0]

    def top_rho(self, m=None) -> np.ndarray:
        return self.rho[: (self.m if m is None else m)]


@dataclass
class Projection:
    """Canonical-variate scores of (test) points for the leading components."""

    scores_x: np.ndarray
    scores_y: np.ndarray

    @property
    def correlation_defined(self) -> bool:
        return self.scores_x.shape[0] >= 2

    def correlations(self) -> np.ndarray:
        """Pearson correlation per component; NaN when fewer than two points."""
        m = self.scores_x.shape[1]
        if not self.correlation_defined:
            return np.full(m, np.nan)
        out = np.empty(m)
        for j in range(m):
            sx = self.scores_x[:, j]
            sy = self.scores_y[:, j]
            sx = sx - sx.mean()
            sy = sy - sy.mean()
            denom = np.sqrt((sx @ sx) * (sy @ sy))
            out[j] = sx @ sy / denom if denom > 0 else np.nan
        return out


def _solve_dual(gx, gy, wxx, wyy, wxy, kappa, strict_rho):
    bx = _ViewBasis(gx, wxx, kappa)
    by = _ViewBasis(gy, wyy, kappa)
    gamma = bx.basis.T @ (wxy[:, None] * by.basis)
    r = bx.whitener @ gamma @ by.whitener
    u, s, vt = np.linalg.svd(r, full_matrices=False)
    # a shared weight vector makes rho a genuine weighted correlation, bounded
    # by 1 up to round-off; with distinct CO/CCO weight vectors the Rayleigh
    # quotient may legitimately exceed 1 and is clipped, not rejected
    if strict_rho and s.size and s[0] > 1.0 + _RHO_EXCURSION:
        raise NumericError(f"canonical correlation {s[0]:.6g} exceeds 1 beyond tolerance")
    rho_raw = s
    rho = np.clip(s, 0.0, 1.0)
    alpha_x = bx.coeff_map @ (bx.whitener @ u)
    alpha_y = by.coeff_map @ (by.whitener @ vt.T)
    return rho, rho_raw, *_fix_signs(alpha_x, alpha_y)


def _solve_printed(gx, gy, wxx, wyy, wxy, kappa):
    # ablation mode: generalized eigenproblem with the inner -1/2 exponent
    # and kappa*I regularizers, each view solved independently; the square
    # roots of the eigenvalues are taken as the correlations
    n = gx.shape[0]
    eye = np.eye(n)
    ax = gx @ (wxx[:, None] * gx) + kappa * eye
    ay = gy @ (wyy[:, None] * gy) + kappa * eye
    cxy = gx @ (wxy[:, None] * gy)

    def side(lhs_outer, inner, constraint):
        half = _inv_sqrt_spd(inner)
        lhs = lhs_outer @ half @ lhs_outer.T
        vals, vecs = scipy.linalg.eigh(0.5 * (lhs + lhs.T), 0.5 * (constraint + constraint.T))
        order = np.argsort(vals)[::-1]
        return np.sqrt(np.clip(vals[order], 0.0, None)), vecs[:, order]

    rho_raw, alpha_x = side(cxy, ay, ax)
    _, alpha_y = side(cxy.T, ax, ay)
    rho = np.clip(rho_raw, 0.0, 1.0)
    return rho, rho_raw, *_fix_signs(alpha_x, alpha_y)


def fit_weighted_kcca(
    k_x,
    k_y,
    kappa=1e-5,
    m=1,
    center_wx=None,
    center_wy=None,
    weights_xx=None,
    weights_yy=None,
    weights_xy=None,
    method="standard",
    formulation="operator",
    loss=None,
    converged=True,
) -> CcaModel:
    """Fit kernel CCA from raw Gram matrices with explicit weight vectors.

    This is the shared core: the standard fit passes uniform vectors
    everywhere, the robust fit passes robust-mean centering weights and
    KIRWLS operator weights, and contamination-path refits pass the atom
    weights of a perturbed empirical measure.
    """
    k_x = check_symmetric(k_x, "K_x")
    k_y = check_symmetric(k_y, "K_y")
    n = k_x.shape[0]
    if k_y.shape[0] != n:
        raise ValueError("K_x and K_y must have the same size")
    if n < 2:
        raise ValueError("kernel CCA needs at least two samples")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}]")

    center_wx = uniform_weights(n) if center_wx is None else check_simplex(center_wx, n=n)
    center_wy = uniform_weights(n) if center_wy is None else check_simplex(center_wy, n=n)
    weights_xx = uniform_weights(n) if weights_xx is None else check_simplex(weights_xx, n=n)
    weights_yy = uniform_weights(n) if weights_yy is None else check_simplex(weights_yy, n=n)
    weights_xy = uniform_weights(n) if weights_xy is None else check_simplex(weights_xy, n=n)

    gx = center(k_x, center_wx).centered
    gy = center(k_y, center_wy).centered
    strict_rho = np.array_equal(weights_xx, weights_xy) and np.array_equal(weights_yy, weights_xy)
    if formulation == "operator":
        rho, rho_raw, alpha_x, alpha_y = _solve_dual(
            gx, gy, weights_xx, weights_yy, weights_xy, kappa, strict_rho
        )
    elif formulation == "printed":
        rho, rho_raw, alpha_x, alpha_y = _solve_printed(gx, gy, weights_xx, weights_yy, weights_xy, kappa)
    else:
        raise ValueError("formulation must be 'operator' or 'printed'")
    if m > rho.size:
        pad = m - rho.size
        rho = np.concatenate([rho, np.zeros(pad)])
        rho_raw = np.concatenate([rho_raw, np.zeros(pad)])
        alpha_x = np.hstack([alpha_x, np.zeros((n, pad))])
        alpha_y = np.hstack([alpha_y, np.zeros((n, pad))])
    return CcaModel(
        rho=rho,
        rho_raw=rho_raw,
        alpha_x=alpha_x,
        alpha_y=alpha_y,
        kappa=float(kappa),
        m=int(m),
        center_wx=center_wx,
        center_wy=center_wy,
        weights_xx=weights_xx,
        weights_yy=weights_yy,
        weights_xy=weights_xy,
        method=method,
        formulation=formulation,
        converged=converged,
        loss=loss,
    )


def fit_standard_kcca(k_x, k_y, kappa=1e-5, m=1, formulation="operator") -> CcaModel:
    """Standard kernel CCA: uniform centering and uniform 1/n operator weights."""
    return fit_weighted_kcca(k_x, k_y, kappa=kappa, m=m, formulation=formulation)


def fit_robust_kcca(
    k_x,
    k_y,
    loss=None,
    kappa=1e-5,
    m=1,
    tol=1e-8,
    max_iter=200,
    formulation="operator",
    cov_weights="shared",
) -> CcaModel:
    """Robust kernel CCA: robust centering plus KIRWLS operator weights.

    Pipeline: (1) robust kernel mean per view gives the centering weights;
    (2) robust CCO weights for the pair (and, per ``cov_weights``, CO weights
    per view) are fitted on the robust-centered Grams; (3) the same dual
    eigenproblem as the standard fit runs with those diagonal weight matrices.
    With the quadratic loss every weight vector is exactly uniform and the
    result coincides with the standard fit.

    ``cov_weights="shared"`` (default) reuses the CCO weights for both CO
    blocks, the variant suggested for outliers that affect the marginals and
    the joint alike; it keeps the correlations below 1 and is markedly less
    volatile on contaminated data. ``cov_weights="separate"`` fits the three
    weight vectors independently; the covariance is then normalized by
    differently-weighted variances, so the leading correlations may
    legitimately exceed 1 and are clipped in ``rho`` with the unclipped
    spectrum kept in ``rho_raw``.
    """
    if cov_weights not in ("separate", "shared"):
        raise ValueError("cov_weights must be 'separate' or 'shared'")
    k_x = check_symmetric(k_x, "K_x")
    k_y = check_symmetric(k_y, "K_y")
    mean_x = fit_robust_mean(k_x, loss=loss, tol=tol, max_iter=max_iter)
    mean_y = fit_robust_mean(k_y, loss=loss, tol=tol, max_iter=max_iter)
    gx = center(k_x, mean_x.weights).centered
    gy = center(k_y, mean_y.weights).centered
    cco = fit_robust_cov(gx, gy, loss=loss, tol=tol, max_iter=max_iter,
                         centering_weights_x=mean_x.weights,
                         centering_weights_y=mean_y.weights)
    if cov_weights == "shared":
        co_fits = (cco, cco)
        w_xx = w_yy = cco.weights
    else:
        co_x = fit_robust_cov(gx, gx, loss=loss, tol=tol, max_iter=max_iter,
                              centering_weights_x=mean_x.weights)
        co_y = fit_robust_cov(gy, gy, loss=loss, tol=tol, max_iter=max_iter,
                              centering_weights_x=mean_y.weights)
        co_fits = (co_x, co_y)
        w_xx, w_yy = co_x.weights, co_y.weights
    converged = all(f.converged for f in (mean_x, mean_y, cco, *co_fits))
    if not converged:
        warnings.warn("KIRWLS did not converge within max_iter; model flagged", RuntimeWarning)
    model = fit_weighted_kcca(
        k_x,
        k_y,
        kappa=kappa,
        m=m,
        center_wx=mean_x.weights,
        center_wy=mean_y.weights,
        weights_xx=w_xx,
        weights_yy=w_yy,
        weights_xy=cco.weights,
        method="robust",
        formulation=formulation,
        loss=cco.loss,
        converged=converged,
    )
    model.diagnostics = {
        "cov_weights": cov_weights,
        "mean_iterations": (mean_x.iterations, mean_y.iterations),
        "cov_iterations": tuple(f.iterations for f in (*co_fits, cco)),
    }
    return model


def project(model: CcaModel, kt_x_centered, kt_y_centered) -> Projection:
    """Score held-out points on the leading ``model.m`` canonical variates.

    The inputs are test kernel rows already centered with the model's
    centering weights via :func:`rkcca.kernels.center_test`.
    """
    ktx = np.atleast_2d(np.asarray(kt_x_centered, dtype=float))
    kty = np.atleast_2d(np.asarray(kt_y_centered, dtype=float))
    n = model.n
    if ktx.shape[1] != n or kty.shape[1] != n:
        raise ValueError(f"centered test rows must have {n} columns")
    if ktx.shape[0] != kty.shape[0]:
        raise ValueError("test sets for the two views differ in length")
    cols = slice(0, model.m)
    return Projection(scores_x=ktx @ model.alpha_x[:, cols], scores_y=kty @ model.alpha_y[:, cols])


def project_raw(model: CcaModel, kt_x_raw, k_x, kt_y_raw, k_y) -> Projection:
    """Convenience wrapper: center raw test rows with the model's weights, then project."""
    return project(
        model,
        center_test(kt_x_raw, k_x, model.center_wx),
        center_test(kt_y_raw, k_y, model.center_wy),
    )
