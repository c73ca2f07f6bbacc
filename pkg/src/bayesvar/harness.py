"""Monte Carlo study over parameter grids and an expanding-window backtest.

Both drivers write flat CSV tables. Every random quantity is keyed by the
grid/backtest seed plus the coordinates of the task, so the output does
not depend on the number of worker processes or on task order.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import datetime as dt
import io
import math
from typing import Optional

import numpy as np

from .distributions import BaselineModel, Family, sample
from .estimators import BOUNDS, Method, RiskEstimate, estimate_many
from .exceptions import DataError, SetupError
from .mcmc import ChainConfig
from .risk import exact_risk, risk_normal, tail_probability

STUDY_HEADER = ("family", "params", "n", "method", "measure", "mean", "lo2.5", "hi97.5", "true", "fail_count")
BACKTEST_HEADER = ("date", "method", "measure", "estimate", "lo2.5", "hi97.5")
MEASURES = ("var", "cvar")
UNDEFINED = "undefined"
FAIL_FRACTION = 0.05
REFERENCE = "reference"


def fmt(x):
    """Seven significant digits, the output precision of every table."""
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".7g")


def _pow2(lo, hi):
    return tuple(2.0**j for j in range(lo, hi + 1))


def default_params(family):
    family = Family.parse(family)
    if family is Family.EXPONENTIAL:
        return tuple((lam,) for lam in _pow2(-2, 2))
    if family is Family.GAMMA:
        return tuple((a, b) for a in (0.25, 0.5, 2.0, 4.0) for b in _pow2(-2, 2))
    # location fixed at zero for the stable families
    return tuple((0.0, s) for s in _pow2(-2, 2))


DEFAULT_SIZES = tuple(2**i for i in range(5, 11))


@dataclass(frozen=True)
class StudyGrid:
    family: Family
    params: tuple = ()
    sizes: tuple = DEFAULT_SIZES
    replications: int = 100
    p: float = 0.95
    p_u: float = 0.9
    methods: tuple = (Method.MH, Method.BMH, Method.IPBMH)
    cfg: ChainConfig = field(default_factory=ChainConfig)

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        params = self.params or default_params(family)
        object.__setattr__(self, "params", tuple(tuple(float(v) for v in prm) for prm in params))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "methods", tuple(Method.parse(m) for m in self.methods))
        for prm in self.params:
            BaselineModel(family, prm)
        tail_probability(self.p, self.p_u)
        if self.replications < 1:
            raise SetupError("replications must be >= 1")
        if not self.methods:
            raise SetupError("at least one method is required")
        smallest = math.ceil(1.0 / (1.0 - self.p_u) - 1e-9)
        if not self.sizes or min(self.sizes) < smallest:
            raise SetupError(f"every sample size must be >= {smallest} at p_u={self.p_u}")

    @property
    def seed(self):
        return self.cfg.seed


@dataclass(frozen=True)
class StudyCell:
    """Cross-replication summary of one (params, n, method, measure).

    ``values`` keeps the per-replication point estimates that went into
    the summary and ``bounds`` their posterior 2.5%/97.5% bounds (one row
    per replication); ``mean``/``lo``/``hi``/``true`` are None for a
    measure that does not exist for the family.
    """

    family: Family
    params: tuple
    n: int
    method: Method
    measure: str
    mean: Optional[float]
    lo: Optional[float]
    hi: Optional[float]
    true: Optional[float]
    fail_count: int
    replications: int
    values: np.ndarray = field(repr=False, compare=False, default=None)
    bounds: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def undefined(self):
        return self.true is None

    @property
    def flagged(self):
        return self.fail_count > FAIL_FRACTION * self.replications

    @property
    def width(self):
        """Spread of the point estimates across replications."""
        return None if self.lo is None else self.hi - self.lo

    @property
    def posterior_width(self):
        """Posterior interval width averaged over replications."""
        if self.bounds is None or not len(self.bounds):
            return None
        return float(np.mean(self.bounds[:, 1] - self.bounds[:, 0]))

    def row(self):
        prm = ";".join(f"{k}={fmt(v)}" for k, v in zip(self.family.param_names, self.params))
        head = [self.family.value, prm, str(self.n), self.method.value, self.measure]
        if self.undefined:
            return head + [UNDEFINED] * 4 + [str(self.fail_count)]
        return head + [fmt(self.mean), fmt(self.lo), fmt(self.hi), fmt(self.true), str(self.fail_count)]


def sample_key(grid: StudyGrid, param_index, n, rep):
    family_index = list(Family).index(grid.family)
    return (grid.seed, family_index, param_index, n, rep)


def _summarize_cell(grid, prm, n, method, results, truth):
    cells = []
    for measure in MEASURES:
        true = getattr(truth, measure)
        got = np.array([r.measure(measure) for r in results
                        if isinstance(r, RiskEstimate) and r.measure(measure)[0] is not None], dtype=float)
        got = got.reshape(-1, 3)
        values, bounds = got[:, 0], got[:, 1:]
        fails = grid.replications - values.size
        if true is None:
            cells.append(StudyCell(grid.family, prm, n, method, measure, None, None, None, None,
                                   fails, grid.replications, values, bounds))
            continue
        if values.size:
            lo, hi = np.percentile(values, BOUNDS)
            mean = float(np.mean(values))
        else:
            mean = lo = hi = math.nan
        cells.append(StudyCell(grid.family, prm, n, method, measure, mean, float(lo), float(hi),
                               float(true), fails, grid.replications, values, bounds))
    return cells


def run_cell(grid: StudyGrid, param_index, n, methods=None):
    """All methods on the same replicated samples of one (params, n)."""
    prm = grid.params[param_index]
    model = BaselineModel(grid.family, prm)
    keys = [sample_key(grid, param_index, n, r) for r in range(grid.replications)]
    samples = [sample(model, n, *k) for k in keys]
    truth = exact_risk(model, grid.p)
    cells = []
    for method in methods or grid.methods:
        results = estimate_many(method, samples, grid.p, grid.p_u, grid.cfg, family=grid.family, keys=keys)
        cells.extend(_summarize_cell(grid, prm, n, method, results, truth))
    return cells


def _run_task(args):
    return run_cell(*args)


def run_study(grid: StudyGrid, jobs=1):
    """Cells in grid order: params, then size, then method, then measure."""
    tasks = [(grid, i, n) for i in range(len(grid.params)) for n in grid.sizes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]
    return [cell for chunk in chunks for cell in chunk]


def _write_rows(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def write_study(cells, path=None):
    return _write_rows(path, STUDY_HEADER, (c.row() for c in cells))


# -- historical backtest --------------------------------------------------------

@dataclass(frozen=True)
class ReturnSeries:
    """Prices and their log returns; ``returns[i]`` is dated ``dates[i + 1]``."""

    dates: tuple
    prices: np.ndarray
    returns: np.ndarray
    percent: bool = False

    def __post_init__(self):
        if len(self.returns) != len(self.prices) - 1:
            raise ValueError("returns must be one shorter than prices")
        if len(self.dates) != len(self.prices):
            raise ValueError("one date per price is required")


def log_returns(prices, dates=None, percent=False) -> ReturnSeries:
    prices = np.asarray(prices, dtype=float).ravel()
    if prices.size < 2:
        raise DataError("at least two prices are required")
    bad = np.flatnonzero(~(np.isfinite(prices) & (prices > 0)))
    if bad.size:
        i = int(bad[0])
        raise DataError(f"price at row {i} must be positive and finite, got {prices[i]!r}", row=i)
    r = np.diff(np.log(prices))
    if percent:
        r = 100.0 * r
    dates = tuple(dates) if dates is not None else tuple(range(prices.size))
    return ReturnSeries(dates, prices, r, percent)


def read_prices(path, percent=False) -> ReturnSeries:
    """Read a ``date,price`` CSV with ISO-8601 dates.

    A ``DataError`` carries the 0-based index of the offending data row;
    its message gives the file line number.
    """
    dates, prices = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header[:2] != ["date", "price"]:
            raise DataError(f"{path}: expected header 'date,price'")
        for line_no, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            index = len(prices)
            try:
                if len(row) < 2:
                    raise ValueError("fewer than two fields")
                date = dt.date.fromisoformat(row[0].strip()).isoformat()
                price = float(row[1])
            except ValueError as err:
                raise DataError(f"{path}: line {line_no}: {err}", row=index) from None
            if not (math.isfinite(price) and price > 0):
                raise DataError(f"{path}: line {line_no}: price must be positive, got {row[1].strip()}", row=index)
            dates.append(date)
            prices.append(price)
    return log_returns(prices, dates, percent)


def write_prices(path, dates, prices):
    _write_rows(path, ("date", "price"), ((d, repr(float(p))) for d, p in zip(dates, prices)))


def synthetic_prices(n_prices, sd, seed, start=dt.date(2020, 1, 1), p0=100.0):
    """Price path whose log returns are i.i.d. N(0, sd), on consecutive calendar days."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    r = rng.normal(0.0, sd, n_prices - 1)
    prices = p0 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    dates = [(start + dt.timedelta(days=i)).isoformat() for i in range(n_prices)]
    return dates, prices


@dataclass(frozen=True)
class BacktestRow:
    date: str
    method: str
    measure: str
    estimate: float
    lo: Optional[float] = None
    hi: Optional[float] = None

    def row(self):
        return [str(self.date), self.method, self.measure, fmt(self.estimate),
                "" if self.lo is None else fmt(self.lo), "" if self.hi is None else fmt(self.hi)]


def backtest_windows(series: ReturnSeries, warmup):
    """``(end, date)`` pairs: the window ``returns[:end]`` is what is known at close of ``date``."""
    total = len(series.returns)
    return [(end, series.dates[end]) for end in range(warmup, total + 1)]


def historical_backtest(series: ReturnSeries, p=0.95, p_u=0.9, methods=(Method.MH, Method.IPBMH),
                        warmup=100, cfg: ChainConfig = ChainConfig(), family=Family.NORMAL):
    """Expanding-window VaR/CVaR of the return distribution's lower tail.

    The row dated ``d`` is estimated from the returns up to and including
    ``d`` and is a forecast for the next return. Losses ``-R`` are modelled
    and the results re-negated, so VaR rows are (negative) return quantiles.
    A final ``reference`` row per measure comes from a Normal fitted to all
    returns by sample mean and standard deviation.
    """
    tail_probability(p, p_u)
    family = Family.parse(family)
    methods = tuple(Method.parse(m) for m in methods)
    smallest = math.ceil(1.0 / (1.0 - p_u) - 1e-9)
    if warmup < smallest:
        raise SetupError(f"warmup must be >= {smallest} observations at p_u={p_u}")
    if warmup > len(series.returns):
        raise SetupError(f"warmup={warmup} exceeds the {len(series.returns)} available returns")

    losses = -np.asarray(series.returns, dtype=float)
    windows = backtest_windows(series, warmup)
    samples = [losses[:end] for end, _ in windows]
    keys = [(cfg.seed, end) for end, _ in windows]

    rows = []
    for method in methods:
        results = estimate_many(method, samples, p, p_u, cfg, family=family, keys=keys)
        for (end, date), res in zip(windows, results):
            if isinstance(res, Exception):
                raise type(res)(f"{method.value} on window ending {date} ({end} returns): {res}")
            for measure in MEASURES:
                point, lo, hi = res.measure(measure)
                if point is None:
                    continue
                rows.append(BacktestRow(date, method.value, measure, -point, -hi, -lo))

    ref = risk_normal(float(np.mean(losses)), float(np.std(losses, ddof=1)), p)
    last = series.dates[-1]
    rows.append(BacktestRow(last, REFERENCE, "var", -ref.var))
    rows.append(BacktestRow(last, REFERENCE, "cvar", -ref.cvar))
    return rows


def write_backtest(rows, path=None):
    return _write_rows(path, BACKTEST_HEADER, (r.row() for r in rows))
