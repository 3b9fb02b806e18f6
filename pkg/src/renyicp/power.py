"""Monte Carlo size and power experiments.

Replications are drawn in blocks of :data:`BLOCK` series. Block ``b`` of sample
size ``T`` uses the Philox substream keyed by ``(seed, T, b)``, so the errors
behind a replication depend only on the base seed, ``T`` and the replication
index. The same errors are reused for every change size ``Δ`` in a grid (common
random numbers), which makes the ``Δ = 0`` column identical to a size run and
keeps power curves smooth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from . import limits
from .dgp import DgpSpec, gen_errors_batch, inject_change, resolve_tstar, true_lrv
from .inference import batch_scaled, law_for, normalize_statistic
from .stats import TrimSpec, renyi_path_max
from .variance import VarianceConfig, format_variance, parse_variance

__all__ = [
    "BLOCK",
    "ExperimentGrid",
    "PowerCell",
    "PowerTable",
    "size_experiment",
    "power_experiment",
    "density_check",
    "density_overlay",
    "local_power_sample",
    "local_power_check",
    "parse_manifest",
    "format_manifest",
]

BLOCK = 250


@dataclass(frozen=True)
class ExperimentGrid:
    statistics: tuple[str, ...] = ("renyi", "cusum", "de")
    deltas: tuple[float, ...] = (0.0,)
    tstar: str = "quarter"
    T_list: tuple[int, ...] = (500,)
    reps: int = 2000
    alpha: float = 0.05
    vcfg: VarianceConfig = field(default_factory=VarianceConfig.kernel_lrv)
    trim: TrimSpec = field(default_factory=TrimSpec)
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.deltas or not all(math.isfinite(d) for d in self.deltas):
            raise ValueError("delta grid must be a finite, non-empty list")
        object.__setattr__(self, "statistics", tuple(normalize_statistic(s) for s in self.statistics))


@dataclass(frozen=True)
class PowerCell:
    statistic: str
    dgp: str
    T: int
    delta: float
    tstar: int
    reps: int
    rejections: int
    invalid: int = 0

    @property
    def rate(self) -> float:
        return self.rejections / self.reps


@dataclass
class PowerTable:
    """Rejection rates, one :class:`PowerCell` per (statistic, T, Δ).

    ``samples`` maps ``(statistic, T)`` to the normalized statistics of the
    ``Δ = 0`` cell when that cell was run; ``diagnostics`` lists monotonicity
    violations of the power curves.
    """

    cells: list[PowerCell]
    samples: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def rate(self, statistic: str, T: int, delta: float) -> float:
        for c in self.cells:
            if c.statistic == statistic and c.T == T and math.isclose(c.delta, delta, abs_tol=1e-12):
                return c.rate
        raise KeyError((statistic, T, delta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "dgp", "T", "delta", "tstar", "reps", "rejections", "invalid", "rate"])
        for c in self.cells:
            w.writerow([c.statistic, c.dgp, c.T, f"{c.delta:.10g}", c.tstar, c.reps, c.rejections, c.invalid, f"{c.rate:.6f}"])
        return buf.getvalue()

    def to_long(self) -> list[tuple[str, float, float]]:
        """``(series, delta, rate)`` rows, one series per statistic and sample size."""
        return [(f"{c.statistic} T={c.T}", c.delta, c.rate) for c in self.cells]


def _blocks(reps):
    for b, start in enumerate(range(0, reps, BLOCK)):
        yield b, min(BLOCK, reps - start)


def _run(grid: ExperimentGrid, dgp: DgpSpec, keep_null_samples: bool) -> PowerTable:
    cells, samples = [], {}
    for T in grid.T_list:
        spec = dgp.with_(T=T)
        tstar = resolve_tstar(grid.tstar, T) if any(d != 0 for d in grid.deltas) else 0
        crit = {s: limits.quantile(law_for(s), 1.0 - grid.alpha) for s in grid.statistics}
        counts = {(s, d): [0, 0] for s in grid.statistics for d in grid.deltas}
        null = {s: [] for s in grid.statistics}
        for b, n in _blocks(grid.reps):
            rng = limits.block_generator(grid.seed, T, b)
            e = gen_errors_batch(spec, BLOCK, rng)[:n] + dgp.mu
            for d in grid.deltas:
                X = e if d == 0 else inject_change(e, 0.0, d, tstar)
                for s in grid.statistics:
                    scaled, _, bad = batch_scaled(X, s, grid.trim, grid.vcfg)
                    with np.errstate(invalid="ignore"):
                        counts[s, d][0] += int(np.sum(scaled > crit[s]))
                    counts[s, d][1] += int(np.sum(bad))
                    if d == 0 and keep_null_samples:
                        null[s].append(scaled)
        for s in grid.statistics:
            for d in grid.deltas:
                rej, bad = counts[s, d]
                cells.append(PowerCell(s, dgp.errors, T, float(d), tstar, grid.reps, rej, bad))
            if keep_null_samples and null[s]:
                samples[s, T] = np.concatenate(null[s])
    return PowerTable(cells, samples)


def size_experiment(grid: ExperimentGrid, dgp: DgpSpec) -> PowerTable:
    """Rejection rates under no change, plus the null samples of every statistic."""
    if any(d != 0 for d in grid.deltas):
        raise ValueError("size experiments need the delta grid {0}")
    return _run(grid, dgp, keep_null_samples=True)


def _monotonicity(table: PowerTable) -> list[dict]:
    issues = []
    keys = sorted({(c.statistic, c.T) for c in table.cells})
    for s, T in keys:
        cells = [c for c in table.cells if c.statistic == s and c.T == T]
        for side in (1, -1):
            branch = sorted((c for c in cells if side * c.delta >= 0), key=lambda c: abs(c.delta))
            for prev, cur in zip(branch, branch[1:]):
                se = math.sqrt(max(prev.rate * (1 - prev.rate), 1e-12) / prev.reps)
                if cur.rate < prev.rate - 2 * se:
                    issues.append(
                        {"statistic": s, "T": T, "from_delta": prev.delta, "to_delta": cur.delta,
                         "drop": prev.rate - cur.rate}
                    )
    return issues


def power_experiment(grid: ExperimentGrid, dgp: DgpSpec) -> PowerTable:
    """Rejection rates over the full (statistic, T, Δ) grid with monotonicity diagnostics."""
    table = _run(grid, dgp, keep_null_samples=0.0 in grid.deltas)
    table.diagnostics = _monotonicity(table)
    return table


def density_check(dgp: DgpSpec, T: int, trim: TrimSpec, reps: int, seed: int):
    """Simulate ``t_T^{1/2} D_T / sigma`` (known sigma) and measure its Kolmogorov
    distance to the max-of-two-sup-Wiener law.

    Returns ``(sample, ks_distance)``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    spec = dgp.with_(T=T)
    sigma = math.sqrt(true_lrv(spec))
    tT, sT = trim.resolve(T), trim.resolve_right(T)
    parts = []
    for b, n in _blocks(reps):
        e = gen_errors_batch(spec, BLOCK, limits.block_generator(seed, T, b))[:n]
        D, _ = renyi_path_max(e, tT, T - sT)
        parts.append(math.sqrt(tT) * D / sigma)
    sample = np.concatenate(parts)
    ks = sps.kstest(sample, limits.MAX_TWO.cdf).statistic
    return sample, float(ks)


KDE_RULE = "scott"


def density_overlay(sample, points: int = 200):
    """Kernel density estimate of ``sample`` next to the max-two limit density.

    The estimate uses a Gaussian kernel with Scott's bandwidth rule; the limit
    density is the numerical derivative of the series CDF on the same grid.
    Returns ``(grid, kde, limit)``, for plots only.
    """
    sample = np.asarray(sample, dtype=float)
    grid = np.linspace(limits.X_MIN, max(4.0, float(np.quantile(sample, 0.999))), points)
    kde = sps.gaussian_kde(sample, bw_method=KDE_RULE)(grid)
    return grid, kde, np.gradient(limits.MAX_TWO.cdf(grid), grid)


def local_power_sample(T: int, tstar: int, delta: float, t_T: int, reps: int, seed: int, chunk: int = 25):
    """``t_T^{1/2} (D_T - |Δ|)`` for iid standard normal errors with a change at ``tstar``."""
    out = np.empty(reps)
    for start in range(0, reps, chunk):
        n = min(chunk, reps - start)
        rng = limits.block_generator(seed, T, start // chunk)
        e = rng.standard_normal((chunk, T))[:n]
        X = inject_change(e, 0.0, delta, tstar)
        D, _ = renyi_path_max(X, t_T, T - t_T)
        out[start : start + n] = math.sqrt(t_T) * (D - abs(delta))
    return out


def local_power_check(T: int, tstar: int, delta: float, t_T: int, reps: int, seed: int) -> float:
    """Kolmogorov distance of the local-alternative sample to ``P(sup W <= x) = 2Φ(x) - 1``."""
    sample = local_power_sample(T, tstar, delta, t_T, reps, seed)
    return float(sps.kstest(sample, limits.cdf_sup_wiener).statistic)


# ---------------------------------------------------------------------------
# manifests

_GRID_KEYS = {"statistics", "delta", "tstar", "T", "reps", "alpha", "variance", "kernel", "bandwidth", "trim", "seed"}
_DGP_KEYS = {"errors", "mu", "burn_in"}


def _parse_deltas(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ValueError("step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(v) for v in text.split(","))


def parse_manifest(text: str) -> tuple[ExperimentGrid, DgpSpec]:
    """Read a flat ``key = value`` manifest into a grid and an error model.

    Recognized keys: ``statistics``, ``delta`` (``a,b,c`` or ``start:stop:step``),
    ``tstar``, ``T``, ``reps``, ``alpha``, ``variance``, ``kernel``, ``bandwidth``,
    ``trim``, ``seed``, ``errors``, ``mu``, ``burn_in`` and the error-model
    coefficients (``rho``, ``omega``, ...).
    """
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"manifest line {lineno}: expected 'key = value', got {raw.strip()!r}")
        kv[key.strip()] = value.strip()

    def field_value(key, cast, default):
        if key not in kv:
            return default
        try:
            return cast(kv[key])
        except ValueError as exc:
            raise ValueError(f"manifest field {key!r}: {exc}") from None

    grid_args = {
        "statistics": field_value("statistics", lambda v: tuple(s.strip() for s in v.split(",")), ("renyi", "cusum", "de")),
        "deltas": field_value("delta", _parse_deltas, (0.0,)),
        "tstar": field_value("tstar", str, "quarter"),
        "T_list": field_value("T", lambda v: tuple(int(s) for s in v.split(",")), (500,)),
        "reps": field_value("reps", int, 2000),
        "alpha": field_value("alpha", float, 0.05),
        "trim": field_value("trim", TrimSpec.parse, TrimSpec()),
        "seed": field_value("seed", int, 0),
    }
    try:
        grid_args["vcfg"] = parse_variance(kv.get("variance", "kernel"), kv.get("kernel", "bartlett"), kv.get("bandwidth", "andrews"))
    except ValueError as exc:
        raise ValueError(f"manifest field 'variance'/'bandwidth': {exc}") from None
    try:
        grid = ExperimentGrid(**grid_args)
    except ValueError as exc:
        raise ValueError(f"manifest: {exc}") from None
    dgp_kv = {k: v for k, v in kv.items() if k not in _GRID_KEYS}
    try:
        dgp = DgpSpec.from_mapping(dgp_kv)
    except ValueError as exc:
        raise ValueError(f"manifest: {exc}") from None
    return grid, dgp


def format_manifest(grid: ExperimentGrid, dgp: DgpSpec) -> str:
    variance, bandwidth = format_variance(grid.vcfg)
    lines = [
        f"statistics = {','.join(grid.statistics)}",
        f"delta = {','.join(f'{d:.10g}' for d in grid.deltas)}",
        f"tstar = {grid.tstar}",
        f"T = {','.join(str(t) for t in grid.T_list)}",
        f"reps = {grid.reps}",
        f"alpha = {grid.alpha:g}",
        f"variance = {variance}",
        f"bandwidth = {bandwidth}",
        f"trim = {grid.trim.describe()}",
        f"seed = {grid.seed}",
        f"errors = {dgp.errors}",
        f"mu = {dgp.mu:g}",
        f"burn_in = {dgp.burn_in}",
    ]
    lines += [f"{k} = {v:g}" for k, v in dgp.params.items()]
    return "\n".join(lines) + "\n"
