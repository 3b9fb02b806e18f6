"""Tests built from the statistics: normalization, limit law and p-value.

Three tests are available:

``renyi``
    Rényi statistic, variance re-estimated at every candidate break,
    max-of-two-sup-Wiener null law.
``cusum``
    CUSUM statistic divided by sigma estimated at its own argmax,
    sup-Brownian-bridge null law.
``de``
    Darling-Erdős statistic with the standardized CUSUM divided by sigma at its
    own argmax, Gumbel-type null law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import limits
from .stats import (
    DegenerateVarianceError,
    TrimSpec,
    as_series,
    cusum_stat,
    darling_erdos_stat,
    renyi_self_normalized,
    renyi_stat,
    self_normalized_path_max,
    weighted_cusum_path_max,
)
from .variance import VarianceConfig, variance_path

__all__ = ["STATISTICS", "TestOutcome", "law_for", "normalize_statistic", "change_test", "batch_scaled"]

STATISTICS = ("renyi", "cusum", "de")
_ALIASES = {"darling-erdos": "de", "darling_erdos": "de", "rényi": "renyi"}

_LAWS = {"renyi": limits.MAX_TWO, "cusum": limits.BRIDGE, "de": limits.GUMBEL}


def normalize_statistic(name: str) -> str:
    key = _ALIASES.get(name.lower(), name.lower())
    if key not in STATISTICS:
        raise ValueError(f"unknown statistic {name!r}; expected one of {STATISTICS}")
    return key


def law_for(name: str) -> limits.LimitLaw:
    return _LAWS[normalize_statistic(name)]


@dataclass(frozen=True)
class TestOutcome:
    """Result of one change-point test.

    ``raw`` is the unnormalized statistic (``D_T``, ``A_T`` or ``E_T`` with unit
    sigma), ``scaled`` the normalized value referred to ``law``. ``sigma_hat`` is
    the variance-based scale used for CUSUM-type tests (``None`` for ``renyi``,
    whose scale varies with ``t``).
    """

    __test__ = False  # not a pytest test class

    statistic: str
    raw: float
    scaled: float
    p_value: float
    argmax: int
    law: str
    t_T: int | None = None
    sigma_hat: float | None = None

    def reject(self, alpha: float) -> bool:
        return self.p_value < alpha

    def decision(self, alpha: float) -> str:
        return "reject" if self.reject(alpha) else "fail to reject"

    def as_dict(self, alpha: float | None = None) -> dict:
        out = {
            "statistic": self.statistic,
            "raw": self.raw,
            "scaled": self.scaled,
            "p_value": self.p_value,
            "argmax": self.argmax,
            "law": self.law,
            "t_T": self.t_T,
            "sigma_hat": self.sigma_hat,
        }
        if alpha is not None:
            out["alpha"] = alpha
            out["decision"] = self.decision(alpha)
        return out


def _sigma_at(x, t: int, vcfg: VarianceConfig) -> float:
    T = len(x)
    t = min(max(t, 1), T - 1)
    var = float(variance_path(x, np.array([t]), vcfg)[0])
    if not var > vcfg.floor**2:
        kind = "negative kernel estimate (non-PSD LRV)" if var < 0 else f"sigma_hat <= {vcfg.floor:g}"
        raise DegenerateVarianceError(f"degenerate variance: {kind} at t={t}")
    return math.sqrt(var)


def _constant_scaled(name: str, T: int) -> float:
    # every centered partial sum is zero, so the statistic is zero whatever sigma is
    return -limits.darling_erdos_norming(T)[1] if name == "de" else 0.0


def _constant_outcome(x, name: str, trim: TrimSpec) -> TestOutcome:
    T = len(x)
    law = _LAWS[name]
    if name == "renyi":
        out = renyi_stat(x, trim)
    else:
        out = cusum_stat(x) if name == "cusum" else darling_erdos_stat(x)
    scaled = _constant_scaled(name, T)
    return TestOutcome(name, out.raw, scaled, limits.p_value(law, scaled), out.argmax, law.kind, out.t_T)


def change_test(
    x,
    statistic: str,
    trim: TrimSpec | None = None,
    vcfg: VarianceConfig | None = None,
    constant_ok: bool = True,
) -> TestOutcome:
    """Run one test on a series and attach its asymptotic p-value.

    A constant series has a zero statistic for any scale and is reported as such
    rather than as a degenerate variance. Pass ``constant_ok=False`` for
    residual series, where an exact fit is a degenerate variance.

    Raises
    ------
    DegenerateVarianceError
        When the variance estimate needed for normalization is degenerate.
    """
    x = as_series(x)
    name = normalize_statistic(statistic)
    trim = trim or TrimSpec("log")
    vcfg = vcfg or VarianceConfig.kernel_lrv()
    law = _LAWS[name]
    if constant_ok and np.ptp(x) == 0.0:
        return _constant_outcome(x, name, trim)
    if name == "renyi":
        sn = renyi_self_normalized(x, trim, vcfg)
        raw = renyi_stat(x, trim).raw
        return TestOutcome(name, raw, sn.scaled, limits.p_value(law, sn.scaled), sn.argmax, law.kind, sn.t_T)
    out = cusum_stat(x) if name == "cusum" else darling_erdos_stat(x)
    sigma = _sigma_at(x, out.argmax, vcfg)
    scaled = cusum_stat(x, sigma).scaled if name == "cusum" else darling_erdos_stat(x, sigma).scaled
    return TestOutcome(name, out.raw, scaled, limits.p_value(law, scaled), out.argmax, law.kind, None, sigma)


def batch_scaled(X, statistic: str, trim: TrimSpec, vcfg: VarianceConfig):
    """Normalized statistics for every row of ``X``.

    Returns ``(scaled, argmax, invalid)``; rows whose variance estimate is
    degenerate get ``scaled = NaN`` and ``invalid = True``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = X.shape[1]
    name = normalize_statistic(statistic)
    if name == "renyi":
        tT, sT = trim.resolve(T), trim.resolve_right(T)
        value, arg, bad = self_normalized_path_max(X, tT, T - sT, vcfg)
        scaled = math.sqrt(tT) * value
    else:
        tau = 0.0 if name == "cusum" else 0.5
        A, arg = weighted_cusum_path_max(X, tau)
        var = variance_path(X, arg[:, None], vcfg)[:, 0]
        bad = ~(var > vcfg.floor**2)
        with np.errstate(invalid="ignore", divide="ignore"):
            scaled = A / np.sqrt(np.where(bad, np.nan, var))
        if name == "de":
            a_T, M_T = limits.darling_erdos_norming(T)
            scaled = a_T * scaled - M_T
    flat = np.ptp(X, axis=1) == 0.0
    if flat.any():
        scaled = np.where(flat, _constant_scaled(name, T), scaled)
        bad = bad & ~flat
    return scaled, arg, bad
