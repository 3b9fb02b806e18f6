"""Expanding-window regression monitoring over CSV data.

For each end index the regression is refit on rows ``[start, end]`` and the
residuals are tested for a mean change. The first CSV column is an opaque,
ordered label (an ISO date or an integer); no calendar arithmetic is done.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .inference import STATISTICS, change_test, normalize_statistic
from .regression import SingularDesignError, ols_residuals
from .stats import DegenerateVarianceError, TrimSpec
from .variance import VarianceConfig

__all__ = [
    "DataError",
    "Table",
    "read_table",
    "load_table",
    "RollingConfig",
    "RollingRow",
    "run_rolling",
    "rolling_csv",
    "first_rejection",
    "FACTORS",
    "make_factor_fixture",
    "fixture_csv",
]

P_FLOOR = np.finfo(float).tiny


class DataError(ValueError):
    """Input data is unusable: missing column, malformed row or bad value."""


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    lines: tuple[int, ...]  # source line of each row, for error messages

    @property
    def labels(self) -> list[str]:
        return [r[0] for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        if name not in self.header:
            raise DataError(f"missing column {name!r}; available: {', '.join(self.header)}")
        j = self.header.index(name)
        out = np.empty(len(self.rows))
        for i, (row, line) in enumerate(zip(self.rows, self.lines)):
            try:
                out[i] = float(row[j])
            except ValueError:
                raise DataError(f"line {line}, column {name!r}: non-numeric value {row[j]!r}") from None
            if not math.isfinite(out[i]):
                raise DataError(f"line {line}, column {name!r}: non-finite value {row[j]!r}")
        return out


def load_table(path) -> Table:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 ({exc.reason})") from None
    return read_table(text)


def read_table(text: str) -> Table:
    """Parse CSV text with a header row into a :class:`Table`.

    Every row must have as many fields as the header; a row that does not is
    reported with its line number.
    """
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV file") from None
    except csv.Error as exc:
        raise DataError(f"line {reader.line_num}: {exc}") from None
    header = tuple(h.strip() for h in header)
    if not header or any(h == "" for h in header):
        raise DataError("line 1: header has empty column names")
    rows, lines = [], []
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise DataError(f"line {reader.line_num}: {exc}") from None
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
        rows.append(tuple(c.strip() for c in row))
        lines.append(reader.line_num)
    if not rows:
        raise DataError("CSV file has a header but no data rows")
    return Table(header, tuple(rows), tuple(lines))


@dataclass(frozen=True)
class RollingConfig:
    """Expanding-window setup: fixed ``start`` row, inclusive end rows ``ends``.

    Rows are 0-based data rows (the header is not counted). An intercept column
    is always included, so an empty ``regressors`` tuple gives an intercept-only
    model whose residuals are the demeaned response.
    """

    response: str
    regressors: tuple[str, ...] = ()
    start: int = 0
    ends: tuple[int, ...] = ()
    statistics: tuple[str, ...] = STATISTICS
    trim: TrimSpec = field(default_factory=TrimSpec)
    vcfg: VarianceConfig = field(default_factory=VarianceConfig.kernel_lrv)
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        object.__setattr__(self, "ends", tuple(int(e) for e in self.ends))
        object.__setattr__(self, "statistics", tuple(normalize_statistic(s) for s in self.statistics))
        if not self.ends:
            raise ValueError("end range is empty")
        if self.start < 0:
            raise ValueError("start must be >= 0")
        if min(self.ends) <= self.start:
            raise ValueError(f"every end must exceed start={self.start}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def check_rows(self, n: int):
        if max(self.ends) >= n:
            raise DataError(f"end {max(self.ends)} outside the file's {n} data rows")


@dataclass(frozen=True)
class RollingRow:
    end: int
    label: str
    results: dict  # statistic -> dict(value, p, neglog10p, argmax, status)


def _empty(status):
    return {"value": math.nan, "p": math.nan, "neglog10p": math.nan, "argmax": -1, "status": status}


def _window_row(y, Z, end, label, cfg: RollingConfig) -> RollingRow:
    try:
        resid = ols_residuals(Z, y)
    except SingularDesignError:
        return RollingRow(end, label, {s: _empty("singular-design") for s in cfg.statistics})
    results = {}
    for s in cfg.statistics:
        try:
            out = change_test(resid, s, cfg.trim, cfg.vcfg, constant_ok=False)
        except DegenerateVarianceError:
            results[s] = _empty("degenerate-variance")
            continue
        except ValueError:
            # window too short for the trimming rule or the norming sequence
            results[s] = _empty("too-short")
            continue
        p = out.p_value
        results[s] = {
            "value": out.scaled,
            "p": p,
            "neglog10p": -math.log10(max(p, P_FLOOR)),
            # argmax as a 0-based row of the file
            "argmax": cfg.start + out.argmax - 1,
            "status": "ok",
        }
    return RollingRow(end, label, results)


def run_rolling(cfg: RollingConfig, table: Table) -> list[RollingRow]:
    """One independent OLS fit and residual test per end index, in ``cfg.ends`` order."""
    cfg.check_rows(len(table.rows))
    y = table.column(cfg.response)
    X = [table.column(c) for c in cfg.regressors]
    Z = np.column_stack([np.ones(len(y)), *X])
    labels = table.labels
    return [_window_row(y[cfg.start : e + 1], Z[cfg.start : e + 1], e, labels[e], cfg) for e in cfg.ends]


def rolling_csv(rows: list[RollingRow], statistics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["end", "label"]
    for s in statistics:
        head += [f"{s}_value", f"{s}_p", f"{s}_neglog10p", f"{s}_argmax", f"{s}_status"]
    w.writerow(head)
    for r in rows:
        line = [r.end, r.label]
        for s in statistics:
            res = r.results[s]
            if res["status"] == "ok":
                line += [f"{res['value']:.10g}", f"{res['p']:.10g}", f"{res['neglog10p']:.10g}", res["argmax"], "ok"]
            else:
                line += ["", "", "", "", res["status"]]
        w.writerow(line)
    return buf.getvalue()


def first_rejection(rows: list[RollingRow], statistic: str, alpha: float):
    """End index of the first window whose p-value is below ``alpha`` (``None`` if none)."""
    for r in rows:
        res = r.results[statistic]
        if res["status"] == "ok" and res["p"] < alpha:
            return r.end
    return None


# ---------------------------------------------------------------------------
# synthetic factor data

FACTORS = ("mkt_rf", "smb", "hml", "rmw", "cma")
_FACTOR_SD = np.array([1.0, 0.5, 0.5, 0.3, 0.3])
_BETAS = np.array([1.0, 0.2, 0.4, -0.1, 0.1])


def make_factor_fixture(seed: int, n: int = 965, break_rows: int = 10, alpha_shift: float = 1.25, noise_sd: float = 1.0):
    """Daily five-factor style data with an intercept break in the final rows.

    Returns ``(labels, y, F)``: business-day ISO dates starting 2015-01-02,
    excess returns and the ``(n, 5)`` factor matrix. The intercept moves from 0
    to ``alpha_shift`` on the last ``break_rows`` rows.
    """
    if not 0 <= break_rows < n:
        raise ValueError("break_rows must lie in [0, n)")
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((n, len(FACTORS))) * _FACTOR_SD
    y = F @ _BETAS + noise_sd * rng.standard_normal(n)
    if break_rows:
        y[n - break_rows :] += alpha_shift
    days = np.busday_offset("2015-01-02", np.arange(n), roll="forward")
    return [str(d) for d in days], y, F


def fixture_csv(labels, y, F) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "excess_ret", *FACTORS])
    for lab, yi, fi in zip(labels, y, F):
        w.writerow([lab, f"{yi:.6f}", *(f"{v:.6f}" for v in fi)])
    return buf.getvalue()
