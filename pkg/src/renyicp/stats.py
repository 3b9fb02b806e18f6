"""CUSUM-family and Rényi-type change-point statistics for a single mean change.

All statistics are maxima over candidate break points ``t`` (1-based, ``x[:t]``
versus ``x[t:]``) and report the smallest maximizing ``t`` as ``argmax``.

The ``*_path`` helpers work along the last axis of 2-D arrays so simulation
code can evaluate thousands of series at once; the public functions validate a
single series and wrap the helpers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .limits import darling_erdos_norming
from .variance import VarianceConfig, variance_path

__all__ = [
    "TrimSpec",
    "StatOutcome",
    "DegenerateVarianceError",
    "as_series",
    "cusum_stat",
    "weighted_cusum_stat",
    "trimmed_std_cusum",
    "renyi_stat",
    "renyi_stat_asym",
    "darling_erdos_stat",
    "renyi_self_normalized",
]


class DegenerateVarianceError(ValueError):
    """A variance estimate fell at or below the configured floor (or was negative)."""


_RULES = ("log", "quarter", "sqrt", "frac", "explicit")


@dataclass(frozen=True)
class TrimSpec:
    """Trimming rule for the Rényi statistic.

    ``rule`` is one of ``log`` (floor(log T), natural log), ``quarter``
    (floor(T^(1/4))), ``sqrt`` (floor(T^(1/2))), ``frac`` (floor(theta T) with
    ``0 < theta < 1/2``) or ``explicit`` (``k``). ``s`` optionally fixes a
    separate right-hand trim.
    """

    rule: str = "log"
    theta: float | None = None
    k: int | None = None
    s: int | None = None

    def __post_init__(self):
        if self.rule not in _RULES:
            raise ValueError(f"unknown trimming rule {self.rule!r}; expected one of {_RULES}")
        if self.rule == "frac" and not (self.theta is not None and 0 < self.theta < 0.5):
            raise ValueError("fractional trimming needs 0 < theta < 1/2")
        if self.rule == "explicit" and not (self.k is not None and self.k >= 1):
            raise ValueError("explicit trimming needs k >= 1")
        if self.s is not None and self.s < 1:
            raise ValueError("right trim s must be >= 1")

    @classmethod
    def explicit(cls, k: int, s: int | None = None) -> "TrimSpec":
        return cls(rule="explicit", k=int(k), s=None if s is None else int(s))

    @classmethod
    def parse(cls, text: str) -> "TrimSpec":
        """Parse ``log``, ``quarter``, ``sqrt``, ``frac=0.1`` or ``k=5``."""
        text = text.strip()
        if text in ("log", "quarter", "sqrt"):
            return cls(rule=text)
        key, sep, value = text.partition("=")
        if sep and key == "frac":
            return cls(rule="frac", theta=float(value))
        if sep and key == "k":
            return cls.explicit(int(value))
        raise ValueError(f"cannot parse trimming rule {text!r}")

    def resolve(self, T: int) -> int:
        """Left trim ``t_T`` for a sample of length ``T``."""
        if self.rule == "log":
            tT = math.floor(math.log(T))
        elif self.rule == "quarter":
            tT = math.floor(T**0.25)
        elif self.rule == "sqrt":
            tT = math.isqrt(T)
        elif self.rule == "frac":
            tT = math.floor(self.theta * T)
        else:
            tT = self.k
        if tT < 1:
            raise ValueError(f"trimming rule {self.describe()} gives t_T={tT} < 1 for T={T}")
        return tT

    def resolve_right(self, T: int) -> int:
        return self.resolve(T) if self.s is None else self.s

    def describe(self) -> str:
        if self.rule == "frac":
            return f"frac={self.theta:g}"
        if self.rule == "explicit":
            return f"k={self.k}" if self.s is None else f"k={self.k},s={self.s}"
        return self.rule


@dataclass(frozen=True)
class StatOutcome:
    """Value of a change-point statistic.

    ``raw`` is the statistic before scaling, ``scaled`` the value compared with
    the limit law, ``argmax`` the smallest maximizing break point (1-based).
    ``t_T``/``s_T`` record the trimming used (``None`` for untrimmed statistics).
    """

    statistic: str
    raw: float
    scaled: float
    argmax: int
    t_T: int | None = None
    s_T: int | None = None


def as_series(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D series, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError("series needs at least 2 observations")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains non-finite values")
    return arr


# ---------------------------------------------------------------------------
# path helpers (operate on the last axis)


def cusum_path(X) -> np.ndarray:
    """``T^{-1/2} (S_t - (t/T) S_T)`` for ``t = 1..T``."""
    X = np.asarray(X, dtype=float)
    T = X.shape[-1]
    S = np.cumsum(X - X.mean(axis=-1, keepdims=True), axis=-1)
    # subtracting the rounded total again cancels any error in the mean
    t = np.arange(1, T + 1)
    return (S - t / T * S[..., -1:]) / math.sqrt(T)


def mean_diff_path(X) -> np.ndarray:
    """``mean(x[:t]) - mean(x[t:])`` for ``t = 1..T-1``."""
    X = np.asarray(X, dtype=float)
    T = X.shape[-1]
    C = np.cumsum(X - X.mean(axis=-1, keepdims=True), axis=-1)
    S = C[..., :-1]
    t = np.arange(1, T)
    # explicit right-hand sums keep any rounding error in the mean from leaking in
    return S / t - (C[..., -1:] - S) / (T - t)


def _window(lo: int, hi: int, T: int):
    if lo < 1 or hi > T - 1 or lo > hi:
        raise ValueError(f"trimming window [{lo}, {hi}] is empty or outside [1, {T - 1}] for T={T}")
    return np.arange(lo, hi + 1)


def _max_arg(values, ts):
    idx = np.argmax(values, axis=-1)
    best = np.take_along_axis(values, idx[..., None], axis=-1)[..., 0]
    return best, ts[idx]


def weighted_cusum_path_max(X, tau: float, lo: int = 1, hi: int | None = None):
    X = np.asarray(X, dtype=float)
    T = X.shape[-1]
    hi = T - 1 if hi is None else hi
    ts = _window(lo, hi, T)
    u = ts / T
    vals = np.abs(cusum_path(X)[..., ts - 1]) * (u * (1.0 - u)) ** (-tau)
    return _max_arg(vals, ts)


def renyi_path_max(X, lo: int, hi: int):
    X = np.asarray(X, dtype=float)
    T = X.shape[-1]
    ts = _window(lo, hi, T)
    vals = np.abs(mean_diff_path(X)[..., ts - 1])
    return _max_arg(vals, ts)


def self_normalized_path_max(X, lo: int, hi: int, vcfg: VarianceConfig):
    """Max over the window of ``|mean diff| / sigma_hat_t``.

    Returns ``(value, argmax, bad)`` where ``bad`` flags rows with any variance
    estimate at or below the floor (negative kernel estimates included). The
    value of such rows is NaN.
    """
    X = np.asarray(X, dtype=float)
    T = X.shape[-1]
    ts = _window(lo, hi, T)
    diffs = np.abs(mean_diff_path(X)[..., ts - 1])
    var = variance_path(X, ts, vcfg)
    if X.ndim == 1:
        var = var.reshape(diffs.shape)
    bad_t = ~(var > vcfg.floor**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = diffs / np.sqrt(np.where(bad_t, 1.0, var))
    ratio = np.where(bad_t, -np.inf, ratio)
    value, arg = _max_arg(ratio, ts)
    bad = bad_t.any(axis=-1)
    value = np.where(bad, np.nan, value)
    return value, arg, bad


# ---------------------------------------------------------------------------
# single-series API


def cusum_stat(x, sigma: float = 1.0) -> StatOutcome:
    """Maximally selected CUSUM ``A_T = T^{-1/2} max_t |S_t - (t/T) S_T|``, t in 1..T."""
    x = as_series(x)
    T = len(x)
    vals = np.abs(cusum_path(x))
    idx = int(np.argmax(vals))
    raw = float(vals[idx])
    return StatOutcome("cusum", raw, raw / sigma, idx + 1)


def weighted_cusum_stat(x, tau: float, sigma: float = 1.0) -> StatOutcome:
    """Weighted CUSUM ``A_T(tau)`` with weight ``((t/T)(1-t/T))^{-tau}``, t in 1..T-1.

    ``tau`` must lie in ``[0, 1/2)``; ``tau = 1/2`` diverges and is only available
    trimmed (:func:`trimmed_std_cusum`) or centered (:func:`darling_erdos_stat`).
    """
    if not 0.0 <= tau < 0.5:
        raise ValueError(f"tau must lie in [0, 1/2), got {tau}")
    x = as_series(x)
    raw, arg = weighted_cusum_path_max(x, tau)
    return StatOutcome("weighted-cusum", float(raw), float(raw) / sigma, int(arg))


def trimmed_std_cusum(x, trim: TrimSpec, sigma: float = 1.0) -> StatOutcome:
    """Standardized CUSUM maximized over ``t_T <= t <= T - t_T``."""
    x = as_series(x)
    T = len(x)
    tT = trim.resolve(T)
    raw, arg = weighted_cusum_path_max(x, 0.5, tT, T - tT)
    return StatOutcome("trimmed-std-cusum", float(raw), float(raw) / sigma, int(arg), tT, tT)


def renyi_stat(x, trim: TrimSpec, sigma: float = 1.0) -> StatOutcome:
    """Rényi statistic ``D_T = max |mean(x[:t]) - mean(x[t:])|`` over ``t_T <= t <= T - t_T``.

    ``scaled`` is ``t_T^{1/2} D_T / sigma``.
    """
    x = as_series(x)
    T = len(x)
    tT = trim.resolve(T)
    sT = trim.resolve_right(T)
    raw, arg = renyi_path_max(x, tT, T - sT)
    raw = float(raw)
    return StatOutcome("renyi", raw, math.sqrt(tT) * raw / sigma, int(arg), tT, sT)


def renyi_stat_asym(x, t_T: int, s_T: int, sigma: float = 1.0) -> StatOutcome:
    """Rényi statistic with asymmetric trimming, ``t_T <= t <= T - s_T``."""
    if t_T < 1 or s_T < 1:
        raise ValueError("trims must be >= 1")
    return renyi_stat(x, TrimSpec.explicit(t_T, s_T), sigma)


def darling_erdos_stat(x, sigma: float = 1.0) -> StatOutcome:
    """Darling-Erdős statistic ``a_T A_T(1/2) - M_T``.

    ``A_T(1/2)`` is the standardized CUSUM maximized over ``1 <= t <= T-1``.
    ``raw`` uses the unnormalized CUSUM; ``scaled`` divides it by ``sigma``
    before centering.
    """
    x = as_series(x)
    T = len(x)
    a_T, M_T = darling_erdos_norming(T)
    A, arg = weighted_cusum_path_max(x, 0.5)
    A = float(A)
    return StatOutcome("darling-erdos", a_T * A - M_T, a_T * A / sigma - M_T, int(arg))


def renyi_self_normalized(x, trim: TrimSpec, vcfg: VarianceConfig) -> StatOutcome:
    """Rényi statistic with the variance re-estimated at each candidate break.

    ``t_T^{1/2} max_t |mean(x[:t]) - mean(x[t:])| / sigma_hat_{T,t}``.

    Raises
    ------
    DegenerateVarianceError
        If any ``sigma_hat_{T,t}`` in the window is at or below ``vcfg.floor``
        (a negative kernel estimate counts as degenerate).
    """
    x = as_series(x)
    T = len(x)
    tT = trim.resolve(T)
    sT = trim.resolve_right(T)
    ts = _window(tT, T - sT, T)
    var = variance_path(x, ts, vcfg)
    bad = ~(var > vcfg.floor**2)
    if bad.any():
        where = ts[bad]
        negative = ts[var < 0]
        detail = f"; negative kernel estimate (non-PSD LRV) at t={[int(v) for v in negative[:5]]}" if negative.size else ""
        raise DegenerateVarianceError(
            f"degenerate variance: sigma_hat <= {vcfg.floor:g} at t={[int(v) for v in where[:5]]}"
            + (" ..." if where.size > 5 else "")
            + detail
        )
    diffs = np.abs(mean_diff_path(x)[ts - 1])
    ratio = diffs / np.sqrt(var)
    idx = int(np.argmax(ratio))
    raw = math.sqrt(tT) * float(ratio[idx])
    return StatOutcome("renyi", raw, raw, int(ts[idx]), tT, sT)
