"""Empirical influence functions for kernel means, (cross-)covariance
operators, and kernel CCA, plus the outlier report built on them.

Everything reduces to n x n Gram algebra. For the CCA influence formulas the
operator pieces are realized in the dual frame of the fitted model: with
f_k = sum_i alpha_k,i Phi~(X_i) the normalized canonical functions and
rho_k their correlations, the resolvent inverses act through the matrices
diag(w) G + kappa I, and the singular operator inverse in the canonical-
variate formulas is taken as the Moore-Penrose pseudo-inverse on the
orthogonal complement of the j-th canonical direction:

    L_j x = -rho_j^-2 * [ (Sigma + kappa I)^-1 x - sum_k c_jk <f_k, x> f_k ],
    c_jj = 1,  c_jk = rho_k^2 / (rho_k^2 - rho_j^2).

The correlation influence value includes the exact contribution of the
kappa-regularized normalization, -kappa rho_j^2 (||f_j||^2 + ||g_j||^2),
which the idealized unregularized formula drops; with it the value matches
contamination-path refits of the actual estimator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .kcca import CcaModel
from .kernels import WeightedCenteredGram, center, center_test
from .robust_cov import CovOperatorFit, tensor_inner
from .validation import (
    DegenerateDataError,
    DegenerateSpectrumError,
    NumericError,
    as_float_array,
    check_symmetric,
)

MAD_SCALE = 1.4826  # consistency factor to the Gaussian standard deviation


# -- mean and covariance-operator influence -----------------------------------

def eif_kernel_mean(k, x_prime_row) -> np.ndarray:
    """EIF of the kernel mean at X', evaluated at every sample point.

    ``x_prime_row`` holds the kernel evaluations k(X_i, X'); the result is
    k(X_i, X') - (1/n) sum_b k(X_i, X_b).
    """
    k = check_symmetric(k, "K")
    row = as_float_array(x_prime_row, "x_prime_row", ndim=1)
    if row.size != k.shape[0]:
        raise ValueError("row length does not match the Gram matrix")
    return row - k.mean(axis=1)


def eif_kernel_cco(k_x, k_y, x_prime_row, y_prime_row) -> np.ndarray:
    """EIF of the empirical kernel CCO at (X', Y'), evaluated at sample pairs.

    At pair (X_i, Y_i) this is the centered cross product
    [k_X(X_i, X') - mean][k_Y(Y_i, Y') - mean] minus the empirical operator's
    own evaluation (1/n) sum_d [centered k_X(X_i, X_d)][centered k_Y(Y_i, Y_d)].
    """
    cx = eif_kernel_mean(k_x, x_prime_row)
    cy = eif_kernel_mean(k_y, y_prime_row)
    ax = k_x - np.asarray(k_x).mean(axis=1, keepdims=True)
    ay = k_y - np.asarray(k_y).mean(axis=1, keepdims=True)
    return cx * cy - (ax * ay).mean(axis=1)


def if_robust_cco(
    fit: CovOperatorFit,
    gram_x: WeightedCenteredGram,
    gram_y: WeightedCenteredGram,
    k_x_row,
    k_x_self,
    k_y_row,
    k_y_self,
    q_func=None,
):
    """Influence of the robust kernel CCO at (X', Y') in dual form.

    Returns ``(alpha, alpha_prime)`` such that the influence function is
    sum_i alpha_i k~_X(., X_i) k~_Y(., Y_i) + alpha' k~_X(., X') k~_Y(., Y').
    ``alpha_prime = n phi(e') / sum_i phi(e_i)`` measures how inlying the
    contamination point is (1 for the quadratic loss); ``alpha`` solves the
    linear system obtained by differentiating the weighted stationarity
    condition of the KIRWLS fixed point.

    ``q_func`` optionally overrides q(t) = t zeta''(t) - zeta'(t) (the score
    function is read as zeta'; pass a callable to substitute another reading).
    """
    if not fit.converged:
        raise ValueError("robust CCO influence requires a converged fit")
    w = fit.weights
    n = w.size
    loss = fit.loss
    e = fit.residuals
    g_cx = gram_x.centered
    g_cy = gram_y.centered
    m = tensor_inner(g_cx, g_cy)

    k_x_row = as_float_array(k_x_row, "k_x_row", ndim=1)
    k_y_row = as_float_array(k_y_row, "k_y_row", ndim=1)
    gx_prime = center_test(k_x_row, gram_x.raw, gram_x.weights).ravel()
    gy_prime = center_test(k_y_row, gram_y.raw, gram_y.weights).ravel()
    m_prime = gx_prime * gy_prime

    def centered_self(k_self, row, g: WeightedCenteredGram):
        return float(k_self) - 2.0 * float(g.weights @ row) + float(g.weights @ g.raw @ g.weights)

    t_prime_sq = centered_self(k_x_self, k_x_row, gram_x) * centered_self(k_y_self, k_y_row, gram_y)
    e_prime_sq = t_prime_sq - 2.0 * float(w @ m_prime) + float(w @ m @ w)
    e_prime = np.sqrt(max(e_prime_sq, 0.0))

    phi = loss.phi(e)
    gamma = float(phi.sum())
    phi_prime = float(loss.phi(e_prime))
    alpha_prime = n * phi_prime / gamma

    if q_func is None:
        q_diag = loss.q_over_t3(e)
    else:
        safe = np.maximum(e, np.finfo(float).tiny)
        q_diag = np.asarray(q_func(e), dtype=float) / safe**3
    cw = np.eye(n) - np.outer(np.ones(n), w)
    sandwich = cw.T @ (q_diag[:, None] * cw)
    a_sys = gamma * np.eye(n) + sandwich @ m
    rhs = -n * phi_prime * w - alpha_prime * (sandwich @ m_prime)
    try:
        alpha = np.linalg.solve(a_sys, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"influence system is singular (cond ~ {np.linalg.cond(a_sys):.3e})"
        ) from exc
    return alpha, alpha_prime


def evaluate_cco_influence(alpha, alpha_prime, gram_x, gram_y, k_x_row, k_y_row) -> np.ndarray:
    """Evaluate a dual-form CCO influence function at the sample pairs."""
    ex = gram_x.raw - (gram_x.raw @ gram_x.weights)[:, None]
    ey = gram_y.raw - (gram_y.raw @ gram_y.weights)[:, None]
    rx = np.asarray(k_x_row, dtype=float) - gram_x.raw @ gram_x.weights
    ry = np.asarray(k_y_row, dtype=float) - gram_y.raw @ gram_y.weights
    return (ex * ey) @ np.asarray(alpha, dtype=float) + alpha_prime * rx * ry


# -- kernel CCA influence ------------------------------------------------------

class KccaInfluence(NamedTuple):
    if_rho: float
    if_fx: np.ndarray
    if_fy: np.ndarray


class _ViewFrame:
    """Per-view operators of a fitted model in the dual representation."""

    def __init__(self, k_raw, center_w, op_weights, alpha, kappa):
        self.k = k_raw
        self.center_w = center_w
        self.g = center(k_raw, center_w).centered
        self.alpha = alpha
        self.kappa = kappa
        self.op_weights = op_weights
        # resolvent (Sigma_hat + kappa I) acts on dual coefficients through
        # diag(w) G + kappa I
        self.resolvent = scipy.linalg.lu_factor(
            op_weights[:, None] * self.g + kappa * np.eye(self.g.shape[0])
        )
        self.scores = self.g @ alpha  # f~_k at the sample points, n x r

    def solve(self, b):
        return scipy.linalg.lu_solve(self.resolvent, b)

    def cross_vector(self, row):
        """Fully-centered kernel vector of a contamination point."""
        return center_test(row, self.k, self.center_w).ravel()

    def resolvent_inverse_eval(self, g_prime):
        """Pointwise values of (Sigma_hat + kappa I)^{-1} k~(., X') at samples."""
        z = self.solve(self.op_weights * g_prime)
        return (g_prime - self.g @ z) / self.kappa

    def cross_operator_coeffs(self, other, wxy, g_prime_other):
        """Dual coefficients of Sigma_xy (Sigma_yy + kappa I)^{-1} k~_y(., Y')."""
        zy = other.solve(other.op_weights * g_prime_other)
        return wxy * ((g_prime_other - other.g @ zy) / self.kappa)


class InfluenceFrame:
    """Shared machinery for influence evaluation of a fitted CCA model."""

    def __init__(self, model: CcaModel, k_x, k_y, j=1, degenerate_tol=1e-8):
        if model.formulation != "operator":
            raise ValueError("influence formulas require the operator-form fit")
        if not 1 <= j <= model.m:
            raise ValueError(f"component {j} out of range (model fitted with m={model.m})")
        k_x = check_symmetric(k_x, "K_x")
        k_y = check_symmetric(k_y, "K_y")
        self.model = model
        self.j = j
        rho = model.rho if model.rho_raw is None else model.rho_raw
        self.rho_all = rho
        self.rho_j = float(rho[j - 1])
        if self.rho_j >= 1.0 - 1e-8:
            warnings.warn(
                f"component {j} correlation {self.rho_j:.8f} is at the unit boundary; "
                "canonical-variate influence is ill-conditioned",
                RuntimeWarning,
            )
        if self.rho_j**2 < degenerate_tol:
            raise DegenerateSpectrumError(f"component {j} correlation is numerically zero")
        gaps = np.abs(rho**2 - self.rho_j**2)
        gaps[j - 1] = np.inf
        if gaps.min() < degenerate_tol:
            raise DegenerateSpectrumError(
                f"repeated canonical correlation near component {j} (gap {gaps.min():.3e})"
            )
        # projector weights of the pseudo-inverse: 1 on the j-th direction,
        # rho_k^2 / (rho_k^2 - rho_j^2) elsewhere, 0 in the null frame
        denom = rho**2 - self.rho_j**2
        denom[j - 1] = 1.0
        self.c = rho**2 / denom
        self.c[j - 1] = 1.0
        self.x = _ViewFrame(k_x, model.center_wx, model.weights_xx, model.alpha_x, model.kappa)
        self.y = _ViewFrame(k_y, model.center_wy, model.weights_yy, model.alpha_y, model.kappa)
        aj = model.alpha_x[:, j - 1]
        bj = model.alpha_y[:, j - 1]
        # exact derivative of the kappa-regularized normalization constraints
        self.kappa_correction = -model.kappa * self.rho_j**2 * (
            float(aj @ self.x.g @ aj) + float(bj @ self.y.g @ bj)
        )

    def _l_apply_eval(self, view: _ViewFrame, rinv_eval, frame_components):
        # L_j x evaluated at the sample points, given the resolvent-inverse
        # evaluations of x and its frame components <f_k, x>
        proj = view.scores @ (self.c * frame_components)
        return -(rinv_eval - proj) / self.rho_j**2

    def rho_influence(self, f_val, g_val) -> float:
        r = self.rho_j
        return float(-(r**2) * f_val**2 + 2 * r * f_val * g_val - r**2 * g_val**2
                     + self.kappa_correction)

    def cv_influence(self, view: _ViewFrame, other: _ViewFrame, wxy,
                     g_prime_own, g_prime_other, own_val, other_val):
        """Influence of one view's canonical variate, evaluated at the samples.

        ``own_val``/``other_val`` are the centered canonical-variate values of
        the contamination point in this view and the other view.
        """
        rho = self.rho_j
        tau1 = self._l_apply_eval(
            view,
            view.resolvent_inverse_eval(g_prime_own),
            view.alpha.T @ g_prime_own,
        )
        z2 = view.cross_operator_coeffs(other, wxy, g_prime_other)
        tau2 = self._l_apply_eval(
            view,
            view.g @ view.solve(z2),
            view.scores.T @ z2,
        )
        fj_eval = view.scores[:, self.j - 1]
        return (
            -rho * (other_val - rho * own_val) * tau1
            - (own_val - rho * other_val) * tau2
            + 0.5 * (1.0 - own_val**2) * fj_eval
        )


def eif_kcca(model: CcaModel, k_x, k_y, j, z_prime) -> KccaInfluence:
    """EIF of the j-th kernel canonical correlation and variates at Z'.

    ``z_prime`` is either a sample index (contamination at a training pair)
    or a tuple ``(k_x_row, k_y_row)`` of raw kernel evaluations of an
    arbitrary point against the training samples. Returns the scalar
    influence on rho_j^2 and the influence functions of both canonical
    variates evaluated at the n sample points (against centered sections).
    """
    frame = InfluenceFrame(model, k_x, k_y, j=j)
    if isinstance(z_prime, (int, np.integer)):
        gx_prime = frame.x.g[:, int(z_prime)]
        gy_prime = frame.y.g[:, int(z_prime)]
    else:
        row_x, row_y = z_prime
        gx_prime = frame.x.cross_vector(as_float_array(row_x, "k_x_row", ndim=1))
        gy_prime = frame.y.cross_vector(as_float_array(row_y, "k_y_row", ndim=1))
    jj = j - 1
    f_val = float(model.alpha_x[:, jj] @ gx_prime)
    g_val = float(model.alpha_y[:, jj] @ gy_prime)
    if_rho = frame.rho_influence(f_val, g_val)
    wxy = model.weights_xy
    if_fx = frame.cv_influence(frame.x, frame.y, wxy, gx_prime, gy_prime, f_val, g_val)
    if_fy = frame.cv_influence(frame.y, frame.x, wxy, gy_prime, gx_prime, g_val, f_val)
    return KccaInfluence(if_rho=if_rho, if_fx=if_fx, if_fy=if_fy)


# -- per-subject report --------------------------------------------------------

@dataclass
class InfluenceReport:
    """Per-subject EIF values for one canonical component, with outlier flags."""

    eif_rho: np.ndarray
    eif_fx: np.ndarray
    eif_fy: np.ndarray
    component: int
    outlier_flags: np.ndarray
    threshold_rule: dict

    @property
    def n(self) -> int:
        return self.eif_rho.size


def mad_outlier_flags(values, multiplier=3.0):
    """Flag entries deviating from the median by more than multiplier * 1.4826 * MAD."""
    values = as_float_array(values, "values", ndim=1)
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    threshold = multiplier * MAD_SCALE * mad
    flags = np.abs(values - med) > threshold
    rule = {"rule": "mad", "multiplier": multiplier, "scale": MAD_SCALE,
            "median": med, "mad": mad, "threshold": threshold}
    return flags, rule


def influence_report(model: CcaModel, k_x, k_y, j=1, mad_multiplier=3.0) -> InfluenceReport:
    """Evaluate the kernel-CCA EIF at every sample pair and flag outliers.

    Row i of the canonical-variate matrices holds the influence of
    contaminating at subject i, evaluated at all n sample points. Flags are
    per the median-absolute-deviation rule on the rho-influence values.
    """
    frame = InfluenceFrame(model, k_x, k_y, j=j)
    jj = j - 1
    rho = frame.rho_j
    fx = frame.x.scores  # n x r centered CV values, g' vectors are Gram columns
    fy = frame.y.scores
    f_col = fx[:, jj]
    g_col = fy[:, jj]
    eif_rho = (-(rho**2) * f_col**2 + 2 * rho * f_col * g_col - rho**2 * g_col**2
               + frame.kappa_correction)

    eif_fx = _report_cv_matrix(frame, frame.x, frame.y, f_col, g_col)
    eif_fy = _report_cv_matrix(frame, frame.y, frame.x, g_col, f_col)
    flags, rule = mad_outlier_flags(eif_rho, multiplier=mad_multiplier)
    return InfluenceReport(eif_rho=eif_rho, eif_fx=eif_fx, eif_fy=eif_fy,
                           component=j, outlier_flags=flags, threshold_rule=rule)


def _report_cv_matrix(frame: InfluenceFrame, view: _ViewFrame, other: _ViewFrame,
                      own_col, other_col):
    # vectorized cv_influence over all subjects: subject i's centered cross
    # vector is column i of the view's centered Gram matrix
    rho = frame.rho_j
    n = view.g.shape[0]
    kappa = view.kappa
    z1 = view.solve(view.op_weights[:, None] * view.g)
    rinv_eval = (view.g - view.g @ z1) / kappa  # column i: resolvent eval for subject i
    tau1 = -(rinv_eval - view.scores @ (frame.c[:, None] * view.scores.T)) / rho**2

    zy = other.solve(other.op_weights[:, None] * other.g)
    z2 = frame.model.weights_xy[:, None] * ((other.g - other.g @ zy) / kappa)
    rinv_z2 = view.g @ view.solve(z2)
    tau2 = -(rinv_z2 - view.scores @ (frame.c[:, None] * (view.scores.T @ z2))) / rho**2

    coef1 = -rho * (other_col - rho * own_col)
    coef2 = -(own_col - rho * other_col)
    fj_eval = view.scores[:, frame.j - 1]
    # tau matrices are points x subjects; report rows are subjects
    return (coef1[:, None] * tau1.T + coef2[:, None] * tau2.T
            + 0.5 * (1.0 - own_col**2)[:, None] * fj_eval[None, :])


# -- robustness summaries -------------------------------------------------------

@dataclass
class RobustnessSummary:
    gamma_star: float
    lambda_star: float
    rho_star: float


def robustness_summaries(points, eif_values, zero_tol=1e-8) -> RobustnessSummary:
    """Gross-error sensitivity, local-shift sensitivity, and rejection point
    of an EIF surface sampled on a grid of contamination points.

    gamma* is the largest |EIF| on the grid; lambda* the largest difference
    quotient |EIF(a) - EIF(b)| / ||a - b|| over grid pairs; rho* the smallest
    grid radius beyond which |EIF| stays below ``zero_tol`` (0 when the whole
    surface is below it, +inf when the largest-radius points are still
    active).
    """
    pts = np.atleast_2d(as_float_array(points, "points"))
    if pts.shape[0] == 1 and pts.shape[1] > 1 and np.asarray(eif_values).size == pts.shape[1]:
        pts = pts.T
    vals = as_float_array(eif_values, "eif_values", ndim=1)
    if pts.shape[0] != vals.size or vals.size == 0:
        raise DegenerateDataError("grid points and EIF values must align and be non-empty")
    gamma = float(np.abs(vals).max())
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    dval = np.abs(vals[:, None] - vals[None, :])
    mask = dist > 0
    lam = float((dval[mask] / dist[mask]).max()) if mask.any() else 0.0
    radii = np.linalg.norm(pts, axis=1)
    active = np.abs(vals) >= zero_tol
    if not active.any():
        rho_star = 0.0
    else:
        r_active = radii[active].max()
        rho_star = np.inf if r_active >= radii.max() else float(r_active)
    return RobustnessSummary(gamma_star=gamma, lambda_star=lam, rho_star=rho_star)
