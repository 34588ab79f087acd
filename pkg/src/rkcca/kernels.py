"""Kernel functions, Gram matrices, and (weighted) centering.

Centering is always expressed through a simplex weight vector w: the feature
maps are shifted by the weighted mean sum_a w_a * Phi(X_a), which on Gram
matrices is the congruence K -> C K C^T with C = I - 1 w^T. Uniform weights
recover the usual empirical centering; the weights of a robust kernel mean
give the robust centering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .validation import (
    DegenerateDataError,
    as_data_matrix,
    as_float_array,
    check_simplex,
    check_symmetric,
)

LINEAR = "linear"
POLYNOMIAL = "polynomial"
GAUSSIAN = "gaussian"
LAPLACIAN = "laplacian"


@dataclass(frozen=True)
class KernelSpec:
    """A positive definite kernel family with concrete hyperparameters.

    Families
    --------
    linear      : k(x, x') = <x, x'>
    polynomial  : k(x, x') = (<x, x'> + offset)^degree
    gaussian    : k(x, x') = exp(-||x - x'||^2 / (2 * bandwidth^2))
    laplacian   : k(x, x') = exp(-d(x, x') / bandwidth), d = L1 by default
                  (the metric is configurable to L2)
    """

    family: str
    degree: int = 1
    bandwidth: float | None = None
    offset: float = 1.0
    metric: str = "l1"

    def __post_init__(self):
        if self.family not in (LINEAR, POLYNOMIAL, GAUSSIAN, LAPLACIAN):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == POLYNOMIAL and int(self.degree) < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.family in (GAUSSIAN, LAPLACIAN):
            if self.bandwidth is None or not self.bandwidth > 0:
                raise ValueError(f"{self.family} kernel needs bandwidth > 0")
        if self.metric not in ("l1", "l2"):
            raise ValueError("laplacian metric must be 'l1' or 'l2'")

    @classmethod
    def linear(cls):
        return cls(LINEAR)

    @classmethod
    def polynomial(cls, degree, offset=1.0):
        return cls(POLYNOMIAL, degree=int(degree), offset=float(offset))

    @classmethod
    def gaussian(cls, bandwidth):
        return cls(GAUSSIAN, bandwidth=float(bandwidth))

    @classmethod
    def laplacian(cls, bandwidth=1.0, metric="l1"):
        return cls(LAPLACIAN, bandwidth=float(bandwidth), metric=metric)


def cross_gram(spec: KernelSpec, x_left, x_right) -> np.ndarray:
    """Kernel evaluations k(x_left_i, x_right_j) as a (T, n) matrix."""
    xl = as_data_matrix(x_left, "x_left")
    xr = as_data_matrix(x_right, "x_right")
    if xl.shape[1] != xr.shape[1]:
        raise ValueError(f"dimension mismatch: {xl.shape[1]} vs {xr.shape[1]}")
    if spec.family == LINEAR:
        return xl @ xr.T
    if spec.family == POLYNOMIAL:
        return (xl @ xr.T + spec.offset) ** spec.degree
    if spec.family == GAUSSIAN:
        d2 = cdist(xl, xr, "sqeuclidean")
        return np.exp(-d2 / (2.0 * spec.bandwidth**2))
    dist = cdist(xl, xr, "cityblock" if spec.metric == "l1" else "euclidean")
    return np.exp(-dist / spec.bandwidth)


def gram(spec: KernelSpec, x) -> np.ndarray:
    """Gram matrix k(x_i, x_j); symmetrized to remove round-off asymmetry."""
    k = cross_gram(spec, x, x)
    return 0.5 * (k + k.T)


def median_bandwidth(x) -> float:
    """Median of the pairwise Euclidean distances (lower median on ties).

    Zero distances from exact duplicates are dropped, so duplicating a dataset
    leaves the value unchanged; all-identical points raise.
    """
    arr = as_data_matrix(x, "X")
    if arr.shape[0] < 2:
        raise DegenerateDataError("median bandwidth needs at least two points")
    d = pdist(arr, "euclidean")
    d = d[d > 0]
    if d.size == 0:
        raise DegenerateDataError("all points identical: no nonzero pairwise distance")
    d.sort()
    return float(d[(d.size - 1) // 2])


@dataclass(frozen=True)
class WeightedCenteredGram:
    """A Gram matrix together with the simplex weights defining its centering."""

    raw: np.ndarray
    weights: np.ndarray
    centered: np.ndarray

    @property
    def n(self) -> int:
        return self.raw.shape[0]


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def center(k, w=None) -> WeightedCenteredGram:
    """Center a Gram matrix against the weighted mean: (I - 1 w^T) K (I - 1 w^T)^T.

    ``w=None`` uses uniform weights (standard centering). The result satisfies
    K_centered @ w = 0.
    """
    k = check_symmetric(k, "K")
    n = k.shape[0]
    w = uniform_weights(n) if w is None else check_simplex(w, n=n)
    kw = k @ w
    wkw = float(w @ kw)
    centered = k - kw[None, :] - kw[:, None] + wkw
    return WeightedCenteredGram(raw=k, weights=w, centered=centered)


def center_test(k_test, k, w=None) -> np.ndarray:
    """Center test-point kernel rows against the training centering.

    Implements K_test - 1_t w^T K - K_test w 1_n^T + (w^T K w) 1_t 1_n^T for a
    (T, n) matrix of kernel evaluations between test and training points. With
    the test set equal to the training set and uniform w this reproduces the
    standard centered Gram.
    """
    k = check_symmetric(k, "K")
    kt = as_float_array(k_test, "K_test")
    if kt.ndim == 1:
        kt = kt.reshape(1, -1)
    if kt.shape[1] != k.shape[0]:
        raise ValueError(f"K_test has {kt.shape[1]} columns, K is {k.shape[0]} x {k.shape[0]}")
    n = k.shape[0]
    w = uniform_weights(n) if w is None else check_simplex(w, n=n)
    kw = k @ w
    wkw = float(w @ kw)
    return kt - kw[None, :] - (kt @ w)[:, None] + wkw
