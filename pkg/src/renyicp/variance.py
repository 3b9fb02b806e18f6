"""Change-robust estimators of the (long-run) variance.

Each estimator takes a candidate break ``t`` and demeans the two segments
``x[:t]`` and ``x[t:]`` separately before estimating, so a mean change at ``t``
does not inflate the estimate.

Two entry points exist for every estimator: scalar functions that follow the
textbook formulas directly (``split_variance``, ``kernel_lrv``) and the
vectorized :func:`variance_path`, which evaluates the estimator at many ``t``
(and for many series at once) from prefix sums. The scalar functions double as
the reference for the vectorized path in the test suite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "VarianceConfig",
    "NonPSDError",
    "bartlett",
    "split_variance",
    "demean_split",
    "autocov",
    "andrews_bandwidth",
    "kernel_lrv",
    "variance_path",
    "parse_variance",
    "format_variance",
]

RHO_CLAMP = 0.999


class NonPSDError(ValueError):
    """Kernel long-run variance estimate came out negative."""


def bartlett(u):
    """Bartlett (triangular) kernel ``max(0, 1 - |u|)``."""
    return np.maximum(0.0, 1.0 - np.abs(u))


@dataclass(frozen=True)
class VarianceConfig:
    """Selects how sigma is estimated.

    Parameters
    ----------
    kind : {"known", "split", "kernel"}
    sigma2 : float, optional
        Known variance, required when ``kind == "known"``.
    kernel : "bartlett" or callable
        Lag window for the kernel estimator.
    kernel_support : float
        ``K(u) == 0`` for ``|u| > kernel_support``; lags beyond it are skipped.
    bandwidth : "andrews" or float
        AR(1) plug-in rule or an explicit bandwidth ``h > 0``.
    floor : float
        Estimates of sigma at or below this value are treated as degenerate.
    """

    kind: str = "split"
    sigma2: float | None = None
    kernel: str | Callable = "bartlett"
    kernel_support: float = 1.0
    bandwidth: str | float = "andrews"
    floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("known", "split", "kernel"):
            raise ValueError(f"unknown variance estimator {self.kind!r}")
        if self.kind == "known" and (self.sigma2 is None or not self.sigma2 > 0):
            raise ValueError("known variance must be positive")
        if isinstance(self.kernel, str) and self.kernel != "bartlett":
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.bandwidth != "andrews":
            if isinstance(self.bandwidth, str) or not float(self.bandwidth) > 0:
                raise ValueError("bandwidth must be 'andrews' or a positive number")
        if not self.floor > 0:
            raise ValueError("variance floor must be positive")

    @classmethod
    def known(cls, sigma2: float) -> "VarianceConfig":
        return cls(kind="known", sigma2=float(sigma2))

    @classmethod
    def split(cls) -> "VarianceConfig":
        return cls(kind="split")

    @classmethod
    def kernel_lrv(cls, bandwidth="andrews", kernel="bartlett", support=1.0) -> "VarianceConfig":
        return cls(kind="kernel", bandwidth=bandwidth, kernel=kernel, kernel_support=support)

    def kernel_fn(self) -> Callable:
        return bartlett if self.kernel == "bartlett" else self.kernel

    def describe(self) -> str:
        if self.kind == "known":
            return f"known={self.sigma2:g}"
        if self.kind == "split":
            return "split"
        kname = self.kernel if isinstance(self.kernel, str) else getattr(self.kernel, "__name__", "user")
        return f"kernel({kname}, h={self.bandwidth})"


def _check_t(T, t):
    if not 1 <= t <= T - 1:
        raise ValueError(f"split point t={t} must satisfy 1 <= t <= T-1 = {T - 1}")


def demean_split(x, t: int) -> np.ndarray:
    """Subtract the mean of ``x[:t]`` from the first segment and of ``x[t:]`` from the rest."""
    x = np.asarray(x, dtype=float)
    _check_t(len(x), t)
    out = x.copy()
    out[:t] -= x[:t].mean()
    out[t:] -= x[t:].mean()
    return out


def split_variance(x, t: int) -> float:
    """Pooled within-segment variance, normalized by T."""
    x = np.asarray(x, dtype=float)
    T = len(x)
    _check_t(T, t)
    left, right = x[:t], x[t:]
    ss = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
    return float(ss / T)


def autocov(xd, lag: int) -> float:
    """Lag-``lag`` autocovariance ``sum x_s x_{s+lag} / (T - lag)`` of an already centered series."""
    xd = np.asarray(xd, dtype=float)
    T = len(xd)
    if not 0 <= lag <= T - 1:
        raise ValueError(f"lag {lag} outside [0, {T - 1}]")
    return float(np.dot(xd[: T - lag], xd[lag:]) / (T - lag))


def _rho_to_bandwidth(rho, T):
    alpha1 = 4.0 * rho**2 / ((1.0 - rho) ** 2 * (1.0 + rho) ** 2)
    h = 1.1447 * np.cbrt(alpha1 * T)
    return np.clip(h, 1.0, T / 2.0)


def andrews_bandwidth(x) -> float:
    """AR(1) plug-in bandwidth for the Bartlett kernel (Andrews, 1991).

    ``rho`` is the lag-1 least-squares autoregression coefficient of the
    centered series and ``h = 1.1447 (4 rho^2 T / ((1-rho)^2 (1+rho)^2))^(1/3)``,
    clamped to ``[1, T/2]``.
    """
    x = np.asarray(x, dtype=float)
    T = len(x)
    if T < 4:
        raise ValueError("bandwidth selection needs T >= 4")
    y = x - x.mean()
    denom = np.dot(y[:-1], y[:-1])
    rho = np.dot(y[1:], y[:-1]) / denom if denom > 0 else 0.0
    if abs(rho) >= RHO_CLAMP:
        warnings.warn(f"AR(1) coefficient {rho:.4f} clamped to +/-{RHO_CLAMP}", RuntimeWarning, stacklevel=2)
        rho = np.sign(rho) * RHO_CLAMP
    return float(_rho_to_bandwidth(rho, T))


def kernel_lrv(x, t: int, cfg: VarianceConfig) -> float:
    """Kernel long-run variance of the series demeaned on both sides of ``t``.

    Raises
    ------
    NonPSDError
        If the weighted autocovariance sum is negative.
    """
    xd = demean_split(x, t)
    T = len(xd)
    h = andrews_bandwidth(xd) if cfg.bandwidth == "andrews" else float(cfg.bandwidth)
    K = cfg.kernel_fn()
    est = autocov(xd, 0)
    max_lag = min(T - 1, int(np.floor(cfg.kernel_support * h)))
    for lag in range(1, max_lag + 1):
        w = float(K(lag / h))
        if w != 0.0:
            est += 2.0 * w * autocov(xd, lag)
    if est < 0:
        raise NonPSDError(
            f"non-PSD LRV: estimate {est:.3g} < 0 at t={t} with h={h:.3g}; "
            "raise the bandwidth or use a different kernel"
        )
    return float(est)


# ---------------------------------------------------------------------------
# vectorized path


def variance_path(X, ts, cfg: VarianceConfig) -> np.ndarray:
    """Variance estimates ``sigma^2_{T,t}`` for every row of ``X`` and every ``t``.

    Parameters
    ----------
    X : array, shape (R, T) or (T,)
    ts : int array, shape (n,) or (R, n)
        1-based split points in ``[1, T-1]``.
    cfg : VarianceConfig

    Returns
    -------
    array of shape (R, n) (or (n,) for 1-D input). Negative kernel estimates are
    returned as they are; the caller decides how to treat them.
    """
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 1
    X = np.atleast_2d(X)
    R, T = X.shape
    ts = np.broadcast_to(np.asarray(ts, dtype=np.int64), (R,) + np.shape(ts)[-1:]).copy()
    if ts.size and (ts.min() < 1 or ts.max() > T - 1):
        raise ValueError("split points must satisfy 1 <= t <= T-1")

    if cfg.kind == "known":
        out = np.full(ts.shape, float(cfg.sigma2))
        return out[0] if squeeze else out

    Xc = X - X.mean(axis=1, keepdims=True)
    zeros = np.zeros((R, 1))
    C = np.concatenate([zeros, np.cumsum(Xc, axis=1)], axis=1)
    total = C[:, -1:]
    Ct = np.take_along_axis(C, ts, axis=1)
    a = Ct / ts
    b = (total - Ct) / (T - ts)
    ss_left = np.take_along_axis(_prefix_ss(Xc), ts, axis=1)
    ss_right = np.take_along_axis(_prefix_ss(Xc[:, ::-1]), T - ts, axis=1)
    gamma0 = (ss_left + ss_right) / T

    if cfg.kind == "split":
        return gamma0[0] if squeeze else gamma0

    K = cfg.kernel_fn()
    if cfg.bandwidth == "andrews":
        h = _andrews_path(Xc, C, ts, a, b, gamma0)
    else:
        h = np.full(ts.shape, float(cfg.bandwidth))
    max_lag = int(min(T - 1, np.floor(cfg.kernel_support * h.max()))) if h.size else 0
    est = gamma0.copy()
    one = np.ones_like(ts)
    for lag in range(1, max_lag + 1):
        w = K(lag / h)
        if not np.any(w):
            continue
        g = _lagged_cross(Xc, C, ts, a, b, lag, one) / (T - lag)
        est += 2.0 * w * g
    # A zero within-segment sum of squares forces every autocovariance to zero.
    est = np.where(gamma0 > 0, est, 0.0)
    return est[0] if squeeze else est


def _prefix_ss(Xc):
    """Within-segment sums of squares of every prefix, shape (R, T+1).

    Built from the nonnegative increments ``(x_t - m_{t-1})^2 (t-1)/t`` so that
    no cancellation occurs when the segment spread is small next to its mean.
    """
    R, T = Xc.shape
    n = np.arange(1, T + 1)
    m = np.cumsum(Xc, axis=1) / n
    prev = np.concatenate([m[:, :1], m[:, :-1]], axis=1)
    inc = (Xc - prev) ** 2 * ((n - 1) / n)
    return np.concatenate([np.zeros((R, 1)), np.cumsum(inc, axis=1)], axis=1)


def _lagged_cross(Xc, C, ts, a, b, lag, one):
    """``sum_{s=1}^{T-lag} X_{s,t} X_{s+lag,t}`` for each t, via prefix sums."""
    R, T = Xc.shape
    zeros = np.zeros((R, 1))
    P = np.concatenate([zeros, np.cumsum(Xc[:, : T - lag] * Xc[:, lag:], axis=1)], axis=1)

    def block(lo, hi, alpha, beta):
        hi = np.maximum(hi, lo - 1)
        n = hi - lo + 1
        sxy = np.take_along_axis(P, hi, axis=1) - np.take_along_axis(P, lo - 1, axis=1)
        sx = np.take_along_axis(C, hi, axis=1) - np.take_along_axis(C, lo - 1, axis=1)
        sy = np.take_along_axis(C, hi + lag, axis=1) - np.take_along_axis(C, lo - 1 + lag, axis=1)
        return sxy - beta * sx - alpha * sy + alpha * beta * n

    top = (T - lag) * one
    left = block(one, np.minimum(ts - lag, top), a, a)
    cross = block(np.maximum(one, ts - lag + 1), np.minimum(ts, top), a, b)
    right = block(np.minimum(ts + 1, top + 1), top, b, b)
    return left + cross + right


def _andrews_path(Xc, C, ts, a, b, gamma0):
    """Per-t AR(1) plug-in bandwidth on the split-demeaned series."""
    R, T = Xc.shape
    one = np.ones_like(ts)
    lag1 = _lagged_cross(Xc, C, ts, a, b, 1, one)
    last = Xc[:, -1:] - b  # X_{T,t}; t <= T-1 so the last point is in the right segment
    denom = T * gamma0 - last * last
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, lag1 / np.where(denom > 0, denom, 1.0), 0.0)
    rho = np.clip(rho, -RHO_CLAMP, RHO_CLAMP)
    return _rho_to_bandwidth(rho, T)


def parse_variance(variance: str = "kernel", kernel: str = "bartlett", bandwidth: str = "andrews") -> VarianceConfig:
    """Build a config from text flags: ``known=σ²``/``split``/``kernel``, ``andrews``/``h=H``."""
    variance = variance.strip()
    if variance.startswith("known="):
        return VarianceConfig.known(float(variance[6:]))
    if variance == "split":
        return VarianceConfig.split()
    if variance != "kernel":
        raise ValueError(f"cannot parse variance estimator {variance!r}")
    bandwidth = bandwidth.strip()
    if bandwidth == "andrews":
        h = "andrews"
    elif bandwidth.startswith("h="):
        h = float(bandwidth[2:])
    else:
        raise ValueError(f"cannot parse bandwidth {bandwidth!r}")
    return VarianceConfig.kernel_lrv(bandwidth=h, kernel=kernel)


def format_variance(cfg: VarianceConfig) -> tuple[str, str]:
    """Inverse of :func:`parse_variance` for the built-in kernel."""
    if cfg.kind == "known":
        return f"known={cfg.sigma2:.17g}", "andrews"
    if cfg.kind == "split":
        return "split", "andrews"
    return "kernel", ("andrews" if cfg.bandwidth == "andrews" else f"h={cfg.bandwidth:.17g}")
