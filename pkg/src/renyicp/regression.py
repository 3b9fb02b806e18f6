"""Residual and moment series from fitted regression models.

A parameter change in a regression shows up as a mean change in its residuals
(or, for a moment-based estimator, in the moment series evaluated at the
full-sample estimate). Those series are then tested with the Rényi machinery
through :func:`residual_change_test`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, optimize
from scipy.stats import qmc

from .inference import TestOutcome, change_test
from .stats import TrimSpec
from .variance import VarianceConfig

__all__ = [
    "SingularDesignError",
    "NlsProblem",
    "GmmProblem",
    "check_design",
    "ols_fit",
    "ols_residuals",
    "nls_fit",
    "nls_residuals",
    "gmm_fit",
    "gmm_moment_series",
    "residual_change_test",
]

COND_THRESHOLD = 1e10


class SingularDesignError(ValueError):
    """Design matrix is rank deficient or too ill-conditioned for least squares."""


def check_design(Z, X=None):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2:
        raise ValueError("design matrix must be 2-D")
    T, d = Z.shape
    if not T > d >= 1:
        raise SingularDesignError(f"need more rows than columns, got T={T}, d={d}")
    if X is not None:
        X = np.asarray(X, dtype=float)
        if X.shape != (T,):
            raise ValueError(f"response has shape {X.shape}, expected ({T},)")
    sv = np.linalg.svd(Z, compute_uv=False)
    # condition of Z'Z is the squared condition of Z
    cond = np.inf if sv[-1] == 0 else (sv[0] / sv[-1]) ** 2
    if not cond < COND_THRESHOLD:
        raise SingularDesignError(f"Z'Z is numerically singular: condition estimate {cond:.3g} >= {COND_THRESHOLD:g}")
    return Z, X


def ols_fit(Z, X) -> np.ndarray:
    """Least squares coefficients via a QR factorization of ``Z``."""
    Z, X = check_design(Z, X)
    Q, R = np.linalg.qr(Z)
    return linalg.solve_triangular(R, Q.T @ X, lower=False)


def ols_residuals(Z, X) -> np.ndarray:
    Z, X = check_design(Z, X)
    return X - Z @ ols_fit(Z, X)


@dataclass(frozen=True)
class NlsProblem:
    """Nonlinear least squares problem ``X_t = h(x_t, theta) + e_t``.

    ``model(x_row, theta)`` returns the fitted value for one regressor row. With
    ``vectorized=True`` it is called once with the full regressor array instead.
    ``bounds`` is a sequence of finite ``(low, high)`` pairs, one per parameter.
    """

    model: Callable
    regressors: np.ndarray
    response: np.ndarray
    bounds: Sequence[tuple[float, float]]
    vectorized: bool = False

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("parameter space must be a box of finite (low, high) bounds")
        if len(self.regressors) != len(self.response):
            raise ValueError("regressors and response differ in length")

    def fitted(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.vectorized:
            return np.asarray(self.model(self.regressors, theta), dtype=float)
        return np.array([self.model(row, theta) for row in self.regressors], dtype=float)

    def loss(self, theta) -> float:
        r = np.asarray(self.response, dtype=float) - self.fitted(theta)
        return float(r @ r)


def _start_grid(bounds, points_per_axis=5, max_axes=3):
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = len(lo)
    fracs = (np.arange(points_per_axis) + 0.5) / points_per_axis
    if d <= max_axes:
        return [lo + np.array(c) * (hi - lo) for c in itertools.product(fracs, repeat=d)]
    n = points_per_axis**max_axes
    return list(lo + qmc.Halton(d, scramble=False).random(n + 1)[1:] * (hi - lo))


def nls_fit(p: NlsProblem, tol: float = 1e-12) -> np.ndarray:
    """Minimize the residual sum of squares over the parameter box.

    Bounded Nelder-Mead from a grid of ``5^min(d, 3)`` starting points; the best
    result is restarted once to shake off a collapsed simplex. Ties go to the
    earliest start.
    """
    bounds = np.asarray(p.bounds, dtype=float)
    best = None
    for x0 in _start_grid(bounds):
        try:
            res = optimize.minimize(
                p.loss, x0, method="Nelder-Mead", bounds=bounds,
                options={"xatol": tol, "fatol": tol, "maxiter": 4000 * len(x0)},
            )
        except (FloatingPointError, OverflowError):
            continue
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise RuntimeError("no start of the least squares search produced a finite objective")
    polish = optimize.minimize(
        p.loss, best.x, method="Nelder-Mead", bounds=bounds,
        options={"xatol": tol, "fatol": tol, "maxiter": 4000 * len(best.x)},
    )
    if not np.isfinite(polish.fun):
        raise RuntimeError("least squares objective is not finite at the solution")
    return np.asarray(polish.x if polish.fun <= best.fun else best.x)


def nls_residuals(p: NlsProblem, theta) -> np.ndarray:
    return np.asarray(p.response, dtype=float) - p.fitted(theta)


@dataclass(frozen=True)
class GmmProblem:
    """Scalar moment condition ``sum_t g(x_t, theta) = 0`` with ``theta`` in ``[low, high]``.

    ``moment(data, theta)`` must return the per-observation moments as an array.
    """

    moment: Callable
    data: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.interval
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("parameter interval must be finite with low < high")

    def total(self, theta: float) -> float:
        return float(np.sum(self.moment(self.data, theta)))


def gmm_fit(p: GmmProblem, grid: int = 2000, xtol: float = 1e-12) -> float:
    """Smallest root of the sample moment equation on the parameter interval.

    The interval is scanned on ``grid`` equal steps for the first sign change
    (or exact zero); the bracket is then refined with Brent's method.
    """
    lo, hi = p.interval
    thetas = np.linspace(lo, hi, grid + 1)
    values = np.array([p.total(th) for th in thetas])
    if not np.all(np.isfinite(values)):
        raise ValueError("moment equation is not finite on the parameter interval")
    for i, v in enumerate(values):
        if v == 0.0:
            return float(thetas[i])
        if i + 1 < len(values) and np.sign(v) != np.sign(values[i + 1]) and values[i + 1] != 0.0:
            return float(optimize.brentq(p.total, thetas[i], thetas[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    raise ValueError(f"moment equation has no root in Θ = [{lo}, {hi}]")


def gmm_moment_series(p: GmmProblem, theta: float) -> np.ndarray:
    return np.asarray(p.moment(p.data, theta), dtype=float)


def residual_change_test(residuals, trim: TrimSpec, vcfg: VarianceConfig) -> TestOutcome:
    """Self-normalized Rényi test on a residual or moment series.

    Under a stable model the statistic has the max-of-two-sup-Wiener limit.
    Residuals that are identically zero raise :class:`DegenerateVarianceError`.
    """
    return change_test(residuals, "renyi", trim, vcfg, constant_ok=False)
