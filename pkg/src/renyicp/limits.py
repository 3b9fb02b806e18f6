"""Asymptotic null laws for the change-point statistics.

Three laws are supported:

``max-two-sup-wiener``
    ``max(xi_1, xi_2)`` with ``xi_i`` independent copies of ``sup_{0<=u<=1} |W(u)|``.
    Null law of the trimmed Rényi statistic.
``sup-brownian-bridge``
    ``sup_{0<=u<=1} |B(u)|`` (Kolmogorov law). Null law of the CUSUM statistic.
``gumbel-de``
    ``exp(-2 exp(-x))``. Null law of the Darling-Erdős statistic.

CDFs and survival functions are evaluated by rapidly converging series. For the
sup of ``|W|`` two exact representations are used: the theta series for small
arguments and the reflection (method of images) series for large ones. The
Monte Carlo sampler is kept independent of the series so it can act as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

__all__ = [
    "LIMIT_KINDS",
    "LimitLaw",
    "cdf_sup_abs_wiener",
    "sf_sup_abs_wiener",
    "cdf_max_two_sup_wiener",
    "sf_max_two_sup_wiener",
    "cdf_sup_brownian_bridge",
    "sf_sup_brownian_bridge",
    "cdf_gumbel_de",
    "sf_gumbel_de",
    "cdf_sup_wiener",
    "quantile",
    "p_value",
    "mc_sample_limit",
    "block_generator",
    "darling_erdos_norming",
    "MAX_TWO",
    "BRIDGE",
    "GUMBEL",
]

LIMIT_KINDS = ("max-two-sup-wiener", "sup-brownian-bridge", "gumbel-de")

DEFAULT_TERMS = 100
DEFAULT_TOL = 1e-10
# Below this argument every CDF handled by a series is < 1e-100.
X_MIN = 0.05
# Switch between theta and reflection series for sup|W|.
_WIENER_SWITCH = 1.5
_BRIDGE_SWITCH = 1.0
_SQRT2PI = np.sqrt(2.0 * np.pi)


def _asarray(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(values, scalar):
    return float(values) if scalar else values


def cdf_sup_abs_wiener(x, terms: int = DEFAULT_TERMS):
    """P(sup_{0<=u<=1} |W(u)| <= x).

    Uses ``(4/pi) sum_k (-1)^k/(2k+1) exp(-pi^2 (2k+1)^2 / (8 x^2))`` for small
    ``x`` and ``1 - 4 sum_j (-1)^j Phi_bar((2j+1) x)`` otherwise.
    """
    arr, scalar = _asarray(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.zeros_like(flat)
    small = (flat > X_MIN) & (flat < _WIENER_SWITCH)
    large = flat >= _WIENER_SWITCH
    if small.any():
        xs = flat[small][:, None]
        odd = 2.0 * np.arange(terms) + 1.0
        signs = np.where(np.arange(terms) % 2 == 0, 1.0, -1.0)
        series = signs / odd * np.exp(-(np.pi**2) * odd**2 / (8.0 * xs**2))
        out[small] = 4.0 / np.pi * series.sum(axis=1)
    if large.any():
        out[large] = 1.0 - _wiener_reflection_sf(flat[large], terms)
    out = np.clip(out, 0.0, 1.0).reshape(np.shape(arr))
    return _out(out, scalar)


def _wiener_reflection_sf(x, terms):
    odd = 2.0 * np.arange(terms) + 1.0
    signs = np.where(np.arange(terms) % 2 == 0, 1.0, -1.0)
    tails = special.ndtr(-np.outer(x, odd))
    return 4.0 * (signs * tails).sum(axis=1)


def sf_sup_abs_wiener(x, terms: int = DEFAULT_TERMS):
    """P(sup |W| > x), accurate in the far tail."""
    arr, scalar = _asarray(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.ones_like(flat)
    large = flat >= _WIENER_SWITCH
    rest = ~large
    if large.any():
        out[large] = _wiener_reflection_sf(flat[large], terms)
    if rest.any():
        out[rest] = 1.0 - np.atleast_1d(cdf_sup_abs_wiener(flat[rest], terms))
    out = np.clip(out, 0.0, 1.0).reshape(np.shape(arr))
    return _out(out, scalar)


def cdf_max_two_sup_wiener(x, terms: int = DEFAULT_TERMS):
    """CDF of the max of two independent copies of sup |W|."""
    f = cdf_sup_abs_wiener(x, terms)
    return f * f


def sf_max_two_sup_wiener(x, terms: int = DEFAULT_TERMS):
    s = sf_sup_abs_wiener(x, terms)
    return s * (2.0 - s)


def cdf_sup_brownian_bridge(x, terms: int = DEFAULT_TERMS):
    """Kolmogorov distribution P(sup |B| <= x)."""
    arr, scalar = _asarray(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.zeros_like(flat)
    small = (flat > X_MIN) & (flat < _BRIDGE_SWITCH)
    large = flat >= _BRIDGE_SWITCH
    if small.any():
        xs = flat[small][:, None]
        odd = 2.0 * np.arange(1, terms + 1) - 1.0
        series = np.exp(-(odd**2) * np.pi**2 / (8.0 * xs**2)).sum(axis=1)
        out[small] = _SQRT2PI / flat[small] * series
    if large.any():
        out[large] = 1.0 - _bridge_sf_series(flat[large], terms)
    out = np.clip(out, 0.0, 1.0).reshape(np.shape(arr))
    return _out(out, scalar)


def _bridge_sf_series(x, terms):
    k = np.arange(1, terms + 1, dtype=float)
    signs = np.where(k % 2 == 1, 1.0, -1.0)
    return 2.0 * (signs * np.exp(-2.0 * np.outer(x, k) ** 2)).sum(axis=1)


def sf_sup_brownian_bridge(x, terms: int = DEFAULT_TERMS):
    arr, scalar = _asarray(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.ones_like(flat)
    large = flat >= _BRIDGE_SWITCH
    rest = ~large
    if large.any():
        out[large] = _bridge_sf_series(flat[large], terms)
    if rest.any():
        out[rest] = 1.0 - np.atleast_1d(cdf_sup_brownian_bridge(flat[rest], terms))
    out = np.clip(out, 0.0, 1.0).reshape(np.shape(arr))
    return _out(out, scalar)


def cdf_gumbel_de(x):
    """exp(-2 exp(-x)), the Darling-Erdős extreme value law."""
    arr, scalar = _asarray(x)
    with np.errstate(over="ignore"):
        out = np.exp(-2.0 * np.exp(-arr))
    return _out(out, scalar)


def sf_gumbel_de(x):
    arr, scalar = _asarray(x)
    with np.errstate(over="ignore"):
        out = -np.expm1(-2.0 * np.exp(-arr))
    return _out(out, scalar)


def cdf_sup_wiener(x):
    """P(sup_{0<=u<=1} W(u) <= x) = 2 Phi(x) - 1 for x >= 0 (one-sided sup)."""
    arr, scalar = _asarray(x)
    out = np.where(arr > 0, 2.0 * special.ndtr(np.maximum(arr, 0.0)) - 1.0, 0.0)
    return _out(out, scalar)


@dataclass(frozen=True)
class LimitLaw:
    """A null law with its series truncation and quantile tolerance."""

    kind: str
    terms: int = DEFAULT_TERMS
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.kind not in LIMIT_KINDS:
            raise ValueError(f"unknown limit law {self.kind!r}; expected one of {LIMIT_KINDS}")
        if self.terms < 5:
            raise ValueError("series truncation must keep at least 5 terms")
        if not 0 < self.tol <= 1e-6:
            raise ValueError("quantile tolerance must lie in (0, 1e-6]")

    def cdf(self, x):
        if self.kind == "max-two-sup-wiener":
            return cdf_max_two_sup_wiener(x, self.terms)
        if self.kind == "sup-brownian-bridge":
            return cdf_sup_brownian_bridge(x, self.terms)
        return cdf_gumbel_de(x)

    def sf(self, x):
        if self.kind == "max-two-sup-wiener":
            return sf_max_two_sup_wiener(x, self.terms)
        if self.kind == "sup-brownian-bridge":
            return sf_sup_brownian_bridge(x, self.terms)
        return sf_gumbel_de(x)

    def _bracket(self, p):
        if self.kind == "gumbel-de":
            lo, hi = -1.0, 1.0
            while self.cdf(lo) > p:
                lo *= 2.0
            while self.cdf(hi) < p:
                hi *= 2.0
            return lo, hi
        lo, hi = X_MIN, 1.0
        while self.cdf(hi) < p:
            hi *= 2.0
        return lo, hi


MAX_TWO = LimitLaw("max-two-sup-wiener")
BRIDGE = LimitLaw("sup-brownian-bridge")
GUMBEL = LimitLaw("gumbel-de")


def quantile(law: LimitLaw, p: float) -> float:
    """Smallest x with ``law.cdf(x) >= p``, found by bracketing root search."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    lo, hi = law._bracket(p)
    if law.cdf(lo) >= p:
        return lo
    return optimize.brentq(lambda x: law.cdf(x) - p, lo, hi, xtol=law.tol, rtol=4 * np.finfo(float).eps)


def p_value(law: LimitLaw, statistic) -> float:
    """Upper-tail probability ``1 - CDF(statistic)``, clamped to [0, 1].

    Computed through the survival series so that small p-values keep their
    relative accuracy. NaN statistics propagate as NaN.
    """
    out = np.clip(law.sf(statistic), 0.0, 1.0)
    return out if np.ndim(out) else float(out)


def darling_erdos_norming(T: int) -> tuple[float, float]:
    """Return ``(a_T, M_T)`` so that ``a_T * A_T(1/2) - M_T`` has the Gumbel limit.

    With ``y = T / (log T)^{3/2}`` and ``L = log log y``::

        a_T = sqrt(2 L)
        M_T = 2 L - (1/2) log L + (1/2) log(pi)

    The triple logarithm requires ``y > e``; smaller samples raise ``ValueError``.
    """
    if T < 3:
        raise ValueError(f"Darling-Erdos norming undefined for T={T}")
    y = T / np.log(T) ** 1.5
    if y <= np.e:
        raise ValueError(
            f"Darling-Erdos norming undefined for T={T}: T/(log T)^1.5 = {y:.4g} must exceed e"
        )
    L = np.log(np.log(y))
    return float(np.sqrt(2.0 * L)), float(2.0 * L - 0.5 * np.log(L) + 0.5 * np.log(np.pi))


_MC_BLOCK = 256


def block_generator(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the substream identified by ``(seed, *key)``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _interval_sup_abs(paths, rng, margin=6.0):
    """Exact sup of |path| over continuous time given its values on the integer grid.

    ``paths`` has shape (R, n + 1) with unit-variance steps. Between grid points
    the path is a Brownian bridge, whose maximum from ``a`` to ``b`` is
    ``(a + b + sqrt((b - a)^2 - 2 log U)) / 2`` (the minimum mirrors it). Only
    intervals with an endpoint within ``margin`` of the grid maximum are drawn;
    an excursion of ``margin`` beyond both endpoints has probability
    ``exp(-2 margin^2)``.
    """
    absp = np.abs(paths)
    grid_max = absp.max(axis=1)
    near = absp >= (grid_max - margin)[:, None]
    cand = near[:, :-1] | near[:, 1:]
    rows, k = np.nonzero(cand)
    a, b = paths[rows, k], paths[rows, k + 1]
    u = rng.random((2, rows.size))
    spread = (b - a) ** 2
    hi = 0.5 * (a + b + np.sqrt(spread - 2.0 * np.log1p(-u[0])))
    lo = 0.5 * (a + b - np.sqrt(spread - 2.0 * np.log1p(-u[1])))
    out = grid_max.copy()
    np.maximum.at(out, rows, np.maximum(hi, -lo))
    return out


def mc_sample_limit(law: LimitLaw, reps: int, steps: int, seed: int, exact_between_steps: bool = True) -> np.ndarray:
    """Draw ``reps`` approximate samples from ``law`` via scaled random-walk suprema.

    Replications are generated in fixed blocks of 256, each block from its own
    Philox substream keyed by ``(seed, block)``, so replication ``i`` depends only
    on ``(seed, i)``.

    With ``exact_between_steps`` the supremum between grid points is drawn from
    the Brownian-bridge maximum law, which removes the O(steps ** -0.5) downward
    bias of the plain grid maximum. With ``exact_between_steps=False`` the grid
    maximum is returned as is.

    The ``gumbel-de`` law is the limit of a centered maximum that converges far
    too slowly to simulate from paths; it is sampled by CDF inversion and is
    therefore not an independent check of :func:`cdf_gumbel_de`.
    """
    if reps < 1 or steps < 1:
        raise ValueError("reps and steps must be positive")
    out = np.empty(reps)
    scale = 1.0 / np.sqrt(steps)
    for block, start in enumerate(range(0, reps, _MC_BLOCK)):
        n = min(_MC_BLOCK, reps - start)
        rng = block_generator(seed, block)
        if law.kind == "gumbel-de":
            sups = -np.log(-np.log(rng.random(_MC_BLOCK)) / 2.0)
        else:
            copies = 2 if law.kind == "max-two-sup-wiener" else 1
            walk = np.zeros((_MC_BLOCK * copies, steps + 1))
            np.cumsum(rng.standard_normal((_MC_BLOCK * copies, steps)), axis=1, out=walk[:, 1:])
            if law.kind == "sup-brownian-bridge":
                walk -= np.arange(steps + 1) / steps * walk[:, -1:]
            if exact_between_steps:
                sups = _interval_sup_abs(walk, rng)
            else:
                sups = np.abs(walk).max(axis=1)
            sups = sups.reshape(_MC_BLOCK, copies).max(axis=1) * scale
        out[start : start + n] = sups[:n]
    return out
