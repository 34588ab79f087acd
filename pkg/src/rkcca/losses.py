"""Robust loss families and the quantities KIRWLS derives from them.

Each loss is a function ``zeta`` on nonnegative residuals together with its
derivative ``zeta_prime``, the weight function ``phi(t) = zeta_prime(t) / t``
(finite at 0 by its right-limit), the IRLS surrogate used by the convergence
diagnostics, and the curvature combination ``q(t) = t * zeta''(t) - zeta'(t)``
needed by the covariance-operator influence system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUADRATIC = "quadratic"
HUBER = "huber"
HAMPEL = "hampel"
TUKEY = "tukey"

_N_CONSTANTS = {QUADRATIC: 0, HUBER: 1, HAMPEL: 3, TUKEY: 1}


def _as_nonneg(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("loss functions are defined on t >= 0")
    return arr


@dataclass(frozen=True)
class RobustLoss:
    """A robust loss family with concrete tuning constants.

    Parameters
    ----------
    family : str
        One of ``quadratic``, ``huber``, ``hampel``, ``tukey``.
    constants : tuple of float
        Huber and Tukey take a single cutoff c > 0; Hampel takes
        0 < c1 < c2 < c3; quadratic takes none.
    """

    family: str
    constants: tuple = field(default=())

    def __post_init__(self):
        if self.family not in _N_CONSTANTS:
            raise ValueError(f"unknown loss family {self.family!r}")
        consts = tuple(float(c) for c in self.constants)
        object.__setattr__(self, "constants", consts)
        if len(consts) != _N_CONSTANTS[self.family]:
            raise ValueError(
                f"{self.family} loss takes {_N_CONSTANTS[self.family]} constants, "
                f"got {len(consts)}"
            )
        if any(c <= 0 for c in consts):
            raise ValueError("loss constants must be strictly positive")
        if self.family == HAMPEL and not consts[0] < consts[1] < consts[2]:
            raise ValueError("hampel constants must satisfy c1 < c2 < c3")

    @classmethod
    def quadratic(cls):
        return cls(QUADRATIC)

    @classmethod
    def huber(cls, c):
        return cls(HUBER, (c,))

    @classmethod
    def hampel(cls, c1, c2, c3):
        return cls(HAMPEL, (c1, c2, c3))

    @classmethod
    def tukey(cls, c):
        return cls(TUKEY, (c,))

    # -- zeta ---------------------------------------------------------------

    def zeta(self, t):
        t = _as_nonneg(t)
        if self.family == QUADRATIC:
            return 0.5 * t**2
        if self.family == HUBER:
            (c,) = self.constants
            return np.where(t <= c, 0.5 * t**2, c * t - 0.5 * c**2)
        if self.family == HAMPEL:
            c1, c2, c3 = self.constants
            tail = 0.5 * c1 * (c2 + c3 - c1)
            out = np.where(t <= c1, 0.5 * t**2, c1 * t - 0.5 * c1**2)
            mid = -0.5 * c1 / (c3 - c2) * (t - c3) ** 2 + tail
            out = np.where(t >= c2, mid, out)
            return np.where(t >= c3, tail, out)
        (c,) = self.constants
        u = np.minimum(t / c, 1.0)
        return 1.0 - (1.0 - u**2) ** 3

    def zeta_prime(self, t):
        t = _as_nonneg(t)
        if self.family == QUADRATIC:
            return t + 0.0
        if self.family == HUBER:
            (c,) = self.constants
            return np.minimum(t, c)
        if self.family == HAMPEL:
            c1, c2, c3 = self.constants
            out = np.where(t <= c1, t, c1)
            out = np.where(t >= c2, c1 * (c3 - t) / (c3 - c2), out)
            return np.where(t >= c3, 0.0, out)
        (c,) = self.constants
        u2 = np.minimum(t / c, 1.0) ** 2
        return np.where(t <= c, 6.0 * t / c**2 * (1.0 - u2) ** 2, 0.0)

    def phi(self, t):
        """Weight function zeta'(t)/t, with phi(0) defined by its limit."""
        t = _as_nonneg(t)
        if self.family == QUADRATIC:
            return np.ones_like(t)
        if self.family == HUBER:
            (c,) = self.constants
            return np.where(t <= c, 1.0, c / np.maximum(t, c))
        if self.family == HAMPEL:
            c1, c2, c3 = self.constants
            out = np.where(t <= c1, 1.0, c1 / np.maximum(t, c1))
            out = np.where(t >= c2, c1 * (c3 - t) / ((c3 - c2) * np.maximum(t, c2)), out)
            return np.where(t >= c3, 0.0, out)
        (c,) = self.constants
        u2 = np.minimum(t / c, 1.0) ** 2
        return np.where(t <= c, 6.0 / c**2 * (1.0 - u2) ** 2, 0.0)

    def surrogate(self, t, anchor):
        """Half-quadratic majorizer p(t; c) = zeta(c) - c*zeta'(c)/2 + phi(c)*t^2/2.

        Satisfies p(c; c) = zeta(c) and, for non-increasing phi,
        p(t; c) >= zeta(t) for all t >= 0.
        """
        t = _as_nonneg(t)
        c = _as_nonneg(anchor)
        return self.zeta(c) - 0.5 * c * self.zeta_prime(c) + 0.5 * self.phi(c) * t**2

    def q_over_t3(self, t):
        """(t*zeta''(t) - zeta'(t)) / t^3 with the correct t -> 0 limits.

        This is the diagonal scaling of the influence linear system; dividing
        analytically avoids 0/0 at small residuals.
        """
        t = _as_nonneg(t)
        if self.family == QUADRATIC:
            return np.zeros_like(t)
        if self.family == HUBER:
            (c,) = self.constants
            # the nonzero branch only applies for t > c, so flooring at c is safe
            return np.where(t <= c, 0.0, -c / np.maximum(t, c) ** 3)
        if self.family == HAMPEL:
            c1, c2, c3 = self.constants
            out = np.where(t <= c1, 0.0, -c1 / np.maximum(t, c1) ** 3)
            out = np.where(t >= c2, -c1 * c3 / ((c3 - c2) * np.maximum(t, c2) ** 3), out)
            return np.where(t >= c3, 0.0, out)
        (c,) = self.constants
        u2 = np.minimum(t / c, 1.0) ** 2
        return np.where(t <= c, -24.0 / c**4 * (1.0 - u2), 0.0)

    def q(self, t):
        """q(t) = t*zeta''(t) - zeta'(t) (score-function curvature combination)."""
        t = _as_nonneg(t)
        return self.q_over_t3(t) * t**3


def huber_from_residuals(residuals):
    """Huber loss with cutoff set to the median of the given residuals.

    The cutoff is resolved once (at KIRWLS initialization) and then frozen so
    the iteration minimizes a fixed objective. Falls back to 1.0 when the
    median residual is not positive (all points coincide with their mean).
    """
    med = float(np.median(np.asarray(residuals, dtype=float)))
    if not med > 0.0:
        med = 1.0
    return RobustLoss.huber(med)


def resolve_loss(loss, residuals):
    """Return a concrete loss; ``None`` means Huber with the median-residual cutoff."""
    if loss is None:
        return huber_from_residuals(residuals)
    if not isinstance(loss, RobustLoss):
        raise TypeError("loss must be a RobustLoss or None")
    return loss
