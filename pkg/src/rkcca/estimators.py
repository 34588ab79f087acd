"""Scikit-learn style estimators wrapping the functional kernel-CCA core.

These classes hold raw data views, resolve kernels (including the median
bandwidth heuristic) at fit time, and expose ``fit`` / ``transform`` /
``get_params`` so the models compose with sklearn pipelines and model
selection utilities. The functional API in :mod:`rkcca.kcca` remains the
primitive layer; everything here delegates to it.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .influence import influence_report
from .kcca import fit_robust_kcca, fit_standard_kcca, project
from .kernels import KernelSpec, center_test, cross_gram, gram, median_bandwidth
from .losses import RobustLoss
from .validation import as_data_matrix, check_consistent_length


def resolve_kernel(kernel, x) -> KernelSpec:
    """Turn a kernel argument into a concrete KernelSpec.

    Accepts a KernelSpec, or one of the strings ``linear``, ``poly-<d>``,
    ``gaussian`` / ``gaussian:median`` / ``gaussian:<bw>``, ``laplacian`` /
    ``laplacian:<bw>``. Gaussian without an explicit bandwidth uses the
    median pairwise distance of ``x``.
    """
    if isinstance(kernel, KernelSpec):
        return kernel
    if not isinstance(kernel, str):
        raise ValueError(f"cannot interpret kernel {kernel!r}")
    name, _, arg = kernel.partition(":")
    name = name.lower()
    if name == "linear":
        return KernelSpec.linear()
    if name.startswith("poly"):
        degree = int(arg) if arg else int(name.split("-")[1]) if "-" in name else 2
        return KernelSpec.polynomial(degree)
    if name == "gaussian":
        if arg in ("", "median"):
            return KernelSpec.gaussian(median_bandwidth(x))
        return KernelSpec.gaussian(float(arg))
    if name == "laplacian":
        return KernelSpec.laplacian(float(arg) if arg else 1.0)
    raise ValueError(f"unknown kernel {kernel!r}")


class KernelCCA(BaseEstimator):
    """Kernel canonical correlation analysis with uniform (standard) weights.

    Parameters
    ----------
    kernel_x, kernel_y : str or KernelSpec
        Kernel per view; ``kernel_y=None`` reuses ``kernel_x``. String forms
        are resolved at fit time (``gaussian`` uses the median heuristic).
    kappa : float
        Regularization added to the variance constraints.
    n_components : int
        Number of canonical pairs exposed by ``transform``.

    Attributes
    ----------
    rho_ : ndarray of shape (n_components,)
        Leading canonical correlations.
    model_ : CcaModel
        The underlying dual-form model.
    """

    def __init__(self, kernel_x="gaussian", kernel_y=None, kappa=1e-5, n_components=1):
        self.kernel_x = kernel_x
        self.kernel_y = kernel_y
        self.kappa = kappa
        self.n_components = n_components

    def _fit_model(self, k_x, k_y):
        return fit_standard_kcca(k_x, k_y, kappa=self.kappa, m=self.n_components)

    def fit(self, X, Y):
        X = as_data_matrix(X, "X")
        Y = as_data_matrix(Y, "Y")
        check_consistent_length(X, Y)
        self.x_train_ = X
        self.y_train_ = Y
        self.kernel_x_ = resolve_kernel(self.kernel_x, X)
        self.kernel_y_ = resolve_kernel(
            self.kernel_x if self.kernel_y is None else self.kernel_y, Y)
        self.k_x_ = gram(self.kernel_x_, X)
        self.k_y_ = gram(self.kernel_y_, Y)
        self.model_ = self._fit_model(self.k_x_, self.k_y_)
        self.rho_ = self.model_.rho[: self.n_components]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before using this estimator")

    def transform(self, X, Y):
        """Canonical-variate scores of new paired observations."""
        self._check_fitted()
        X = as_data_matrix(X, "X")
        Y = as_data_matrix(Y, "Y")
        check_consistent_length(X, Y)
        rows_x = cross_gram(self.kernel_x_, X, self.x_train_)
        rows_y = cross_gram(self.kernel_y_, Y, self.y_train_)
        proj = project(
            self.model_,
            center_test(rows_x, self.k_x_, self.model_.center_wx),
            center_test(rows_y, self.k_y_, self.model_.center_wy),
        )
        return proj.scores_x, proj.scores_y

    def fit_transform(self, X, Y):
        return self.fit(X, Y).transform(X, Y)

    def score(self, X, Y) -> float:
        """Leading canonical correlation of the projected data."""
        scores_x, scores_y = self.transform(X, Y)
        sx = scores_x[:, 0] - scores_x[:, 0].mean()
        sy = scores_y[:, 0] - scores_y[:, 0].mean()
        denom = np.sqrt((sx @ sx) * (sy @ sy))
        return float(sx @ sy / denom) if denom > 0 else float("nan")

    def influence_report_(self, component=1):
        """Per-subject EIF report on the training sample."""
        self._check_fitted()
        return influence_report(self.model_, self.k_x_, self.k_y_, j=component)


class RobustKernelCCA(KernelCCA):
    """Kernel CCA with robust-mean centering and KIRWLS operator weights.

    ``loss=None`` uses Huber with the median-residual cutoff; pass a
    RobustLoss for other families. See :func:`rkcca.kcca.fit_robust_kcca`
    for the ``cov_weights`` modes.
    """

    def __init__(self, kernel_x="gaussian", kernel_y=None, kappa=1e-5, n_components=1,
                 loss=None, tol=1e-8, max_iter=200, cov_weights="shared"):
        super().__init__(kernel_x=kernel_x, kernel_y=kernel_y, kappa=kappa,
                         n_components=n_components)
        self.loss = loss
        self.tol = tol
        self.max_iter = max_iter
        self.cov_weights = cov_weights

    def _fit_model(self, k_x, k_y):
        loss = self.loss
        if isinstance(loss, str):
            loss = RobustLoss(loss) if loss == "quadratic" else None if loss == "huber" else loss
        return fit_robust_kcca(k_x, k_y, loss=loss, kappa=self.kappa,
                               m=self.n_components, tol=self.tol,
                               max_iter=self.max_iter, cov_weights=self.cov_weights)
