"""Seedable error processes and mean-change injection for simulations.

Supported error models: iid standard normal, Rademacher (+1/-1 with probability
1/2), GARCH(1,1), AR(1) and ARMA(2,2). Recursive models are driven by standard
normal innovations, start from a zero state (GARCH from its stationary variance)
and discard ``burn_in`` initial values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import signal

__all__ = [
    "ERROR_MODELS",
    "DgpSpec",
    "gen_errors",
    "gen_errors_batch",
    "garch11_path",
    "inject_change",
    "resolve_tstar",
    "true_lrv",
    "simulate",
]

ERROR_MODELS = ("iid-normal", "rademacher", "garch11", "ar1", "arma22")

# Defaults match the simulation designs the toolkit reproduces.
_DEFAULT_PARAMS = {
    "iid-normal": {},
    "rademacher": {},
    "garch11": {"omega": 0.5, "alpha": 0.1, "beta": 0.7},
    "ar1": {"rho": 0.5},
    "arma22": {"phi1": 0.4, "phi2": -0.03, "psi1": 0.5, "psi2": -0.6},
}


def resolve_tstar(rule: str, T: int) -> int:
    """Change location for ``rule``: ``quarter`` (floor T^(1/4)), ``frac=θ`` (floor θT) or an integer."""
    rule = str(rule).strip()
    if rule == "quarter":
        k = math.floor(T**0.25)
    elif rule.startswith("frac="):
        k = math.floor(float(rule[5:]) * T)
    else:
        k = int(rule.removeprefix("k="))
    if not 1 <= k < T:
        raise ValueError(f"change point {k} from rule {rule!r} outside [1, {T - 1}]")
    return k


@dataclass(frozen=True)
class DgpSpec:
    """Error model, mean change and sample design of one simulated series.

    ``params`` holds the model coefficients (missing keys take the defaults:
    ``garch11`` omega=0.5, alpha=0.1, beta=0.7; ``ar1`` rho=0.5; ``arma22``
    phi=(0.4, -0.03), psi=(0.5, -0.6)). ``tstar`` is a rule understood by
    :func:`resolve_tstar`.
    """

    errors: str = "iid-normal"
    T: int = 500
    mu: float = 0.0
    delta: float = 0.0
    tstar: str = "quarter"
    seed: int = 0
    burn_in: int = 500
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.errors not in ERROR_MODELS:
            raise ValueError(f"unknown error model {self.errors!r}; expected one of {ERROR_MODELS}")
        if self.T < 2:
            raise ValueError("T must be at least 2")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        unknown = set(self.params) - set(_DEFAULT_PARAMS[self.errors])
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)} for {self.errors}")
        p = self.coefficients()
        if self.errors == "garch11":
            if not (p["omega"] > 0 and p["alpha"] >= 0 and p["beta"] >= 0 and p["alpha"] + p["beta"] < 1):
                raise ValueError("GARCH(1,1) needs omega > 0, alpha, beta >= 0, alpha + beta < 1")
        elif self.errors == "ar1":
            if not abs(p["rho"]) < 1:
                raise ValueError("AR(1) needs |rho| < 1")
        elif self.errors == "arma22":
            roots = np.roots([-p["phi2"], -p["phi1"], 1.0])
            if np.any(np.abs(roots) <= 1.0):
                raise ValueError("ARMA(2,2) autoregressive part is not stationary")

    def coefficients(self) -> dict:
        return {**_DEFAULT_PARAMS[self.errors], **self.params}

    def change_point(self) -> int:
        return resolve_tstar(self.tstar, self.T)

    def with_(self, **changes) -> "DgpSpec":
        return replace(self, **changes)

    def to_text(self) -> str:
        """Flat ``key=value`` lines."""
        lines = [f"{f.name}={getattr(self, f.name)}" for f in fields(self) if f.name != "params"]
        lines += [f"{k}={v}" for k, v in self.coefficients().items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DgpSpec":
        kv = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {raw!r}")
            kv[key.strip()] = value.strip()
        return cls.from_mapping(kv)

    @classmethod
    def from_mapping(cls, kv: dict) -> "DgpSpec":
        kv = dict(kv)
        errors = kv.pop("errors", "iid-normal")
        casts = {"T": int, "mu": float, "delta": float, "tstar": str, "seed": int, "burn_in": int}
        args = {}
        for key, cast in casts.items():
            if key in kv:
                try:
                    args[key] = cast(kv.pop(key))
                except ValueError as exc:
                    raise ValueError(f"bad value for {key}: {exc}") from None
        known = _DEFAULT_PARAMS.get(errors, {})
        params = {}
        for key in list(kv):
            if key in known:
                params[key] = float(kv.pop(key))
        if kv:
            raise ValueError(f"unknown fields {sorted(kv)}")
        return cls(errors=errors, params=params, **args)


def garch11_path(w, omega: float, alpha: float, beta: float):
    """Run the GARCH(1,1) recursion on innovations ``w`` (last axis is time).

    Returns ``(e, sigma2_next)``: the errors and the conditional variance after
    the final step.
    """
    w = np.asarray(w, dtype=float)
    e = np.empty_like(w)
    sig2 = np.full(w.shape[:-1], omega / (1.0 - alpha - beta))
    for t in range(w.shape[-1]):
        e[..., t] = np.sqrt(sig2) * w[..., t]
        sig2 = omega + alpha * e[..., t] ** 2 + beta * sig2
    return e, sig2


def _filter(spec: DgpSpec, w):
    p = spec.coefficients()
    if spec.errors == "garch11":
        return garch11_path(w, p["omega"], p["alpha"], p["beta"])[0]
    if spec.errors == "ar1":
        return signal.lfilter([1.0], [1.0, -p["rho"]], w, axis=-1)
    return signal.lfilter([1.0, p["psi1"], p["psi2"]], [1.0, -p["phi1"], -p["phi2"]], w, axis=-1)


def gen_errors_batch(spec: DgpSpec, reps: int, rng: np.random.Generator, innovations=None) -> np.ndarray:
    """Draw ``reps`` independent error series of length ``spec.T`` (shape ``(reps, T)``).

    ``innovations`` (shape ``(reps, T + burn_in)`` for recursive models, ``(reps, T)``
    otherwise) replaces the random draws; it exists for testing the recursions.
    """
    T = spec.T
    if spec.errors == "rademacher":
        if innovations is not None:
            return np.asarray(innovations, dtype=float)
        return 2.0 * rng.integers(0, 2, size=(reps, T)).astype(float) - 1.0
    if spec.errors == "iid-normal":
        return rng.standard_normal((reps, T)) if innovations is None else np.asarray(innovations, dtype=float)
    n = T + spec.burn_in
    w = rng.standard_normal((reps, n)) if innovations is None else np.asarray(innovations, dtype=float)
    if w.shape[-1] != n:
        raise ValueError(f"innovations need length T + burn_in = {n}")
    return _filter(spec, w)[..., spec.burn_in :]


def gen_errors(spec: DgpSpec, innovations=None) -> np.ndarray:
    """One error series of length ``spec.T``, deterministic given ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    inn = None if innovations is None else np.asarray(innovations, dtype=float)[None, :]
    return gen_errors_batch(spec, 1, rng, inn)[0]


def inject_change(e, mu: float, delta: float, tstar: int) -> np.ndarray:
    """``mu + e_t`` up to ``tstar`` and ``mu + delta + e_t`` afterwards (``tstar`` is 1-based)."""
    e = np.asarray(e, dtype=float)
    T = e.shape[-1]
    if not 1 <= tstar < T:
        raise ValueError(f"change point t*={tstar} must satisfy 1 <= t* < T = {T}")
    out = e + mu
    out[..., tstar:] += delta
    return out


def true_lrv(spec: DgpSpec) -> float:
    """Long-run variance of the error model (unit innovation variance)."""
    p = spec.coefficients()
    if spec.errors in ("iid-normal", "rademacher"):
        return 1.0
    if spec.errors == "ar1":
        return 1.0 / (1.0 - p["rho"]) ** 2
    if spec.errors == "arma22":
        return ((1.0 + p["psi1"] + p["psi2"]) / (1.0 - p["phi1"] - p["phi2"])) ** 2
    # GARCH errors are uncorrelated, so the long-run variance is the variance.
    return p["omega"] / (1.0 - p["alpha"] - p["beta"])


def simulate(spec: DgpSpec, innovations=None) -> np.ndarray:
    """Errors from ``spec`` with its mean change applied."""
    e = gen_errors(spec, innovations)
    if spec.delta == 0.0:
        return e + spec.mu
    return inject_change(e, spec.mu, spec.delta, spec.change_point())
