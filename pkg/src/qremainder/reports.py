"""Plain-data carriers (CSV/JSON series, run configs) and dataset regeneration."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .coupling import build_ladder, cond_prob_N_le_array, cond_tail_upper_envelope, default_depth
from .density_models import BenfordSignificandDensity, PowerDensity
from .errors import DomainError
from .gof_stats import DESK_REPLICATIONS, FULL_REPLICATIONS, FULL_SAMPLE_SIZE, rejection_table
from .remainder import RemainderLaw, benford_digit_gap
from .tv_metrics import tv_bound_second_order, tv_exact

VERSION = f"qremainder {__version__}"


def format_value(v):
    """Deterministic text for one CSV cell; None becomes an empty field."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _parse_value(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


@dataclass
class DataSeries:
    """A named rectangular table of numbers with ``#``-prefixed metadata lines."""

    name: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        self.rows = [tuple(r) for r in self.rows]
        for r in self.rows:
            if len(r) != len(self.columns):
                raise DomainError(f"{self.name}: row of length {len(r)} for {len(self.columns)} columns")

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# name={self.name}\n")
        for key, value in self.metadata.items():
            buf.write(f"# {key}={value}\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(format_value(v) for v in r) + "\n")
        return buf.getvalue()

    def to_json(self):
        payload = {
            "name": self.name,
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": [[_json_value(v) for v in r] for r in self.rows],
        }
        return json.dumps(payload, indent=1) + "\n"

    def write(self, path, fmt="csv"):
        text = self.to_json() if fmt == "json" else self.to_csv()
        Path(path).write_text(text, encoding="utf-8", newline="\n")

    @classmethod
    def from_csv(cls, text):
        meta = {}
        name = None
        lines = text.splitlines()
        i = 0
        while i < len(lines) and lines[i].startswith("#"):
            key, _, value = lines[i][1:].strip().partition("=")
            if key == "name":
                name = value
            else:
                meta[key] = value
            i += 1
        if i >= len(lines):
            raise DomainError("no header line")
        columns = lines[i].split(",")
        rows = [tuple(_parse_value(t) for t in line.split(",")) for line in lines[i + 1 :] if line]
        return cls(name or "", columns, rows, meta)

    @classmethod
    def read(cls, path):
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    v = float(v)
    return None if math.isnan(v) else v


@dataclass
class RunConfig:
    """Everything needed to rerun one CLI invocation."""

    subcommand: str
    model: str | None = None
    q: int | None = None
    n: str | None = None
    k: int | None = None
    depth: int | None = None
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    tol: float | None = None
    grid: int | None = None
    samples: int | None = None
    reps: int | None = None
    alpha: float | None = None
    full: bool = False
    threads: int | None = None
    tail: bool = False
    envelope: int | None = None
    count: int | None = None
    table: int | None = None

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise DomainError(f"format must be csv or json, got {self.format!r}")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        return cls.from_dict(data)


def parse_range(text):
    """``"3"`` -> [3]; ``"0..10"`` -> [0, ..., 10]; ``"1,4,6"`` -> [1, 4, 6]."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(t) for t in text.split(",")]
    except ValueError:
        raise DomainError(f"bad range {text!r}") from None
    if not out or min(out) < 0:
        raise DomainError(f"bad range {text!r}")
    return out


# -- dataset builders --------------------------------------------------------

FIG1_BASES = (2, 3, 5, 10)
FIG1_MIDDLE_GRID = 10**4
FIG3_ALPHAS = (0.1, 0.5, 1.0, 1.5, 5.0, 10.0)
FIG3_SECOND_ORDER_ALPHAS = (2.0, 5.0, 10.0)
FIG3_N = range(0, 11)
TABLE_N = range(1, 9)
TABLE1_K = (1, 2, 3)
TABLE2_ALPHAS = (0.1, 0.5, 1.5, 5.0)
TABLE2_K = 3


def _meta(**kw):
    out = {k: format_value(v) if not isinstance(v, str) else v for k, v in kw.items()}
    out["version"] = VERSION
    return out


def figure1_left():
    rows = []
    for q in FIG1_BASES:
        ladder = build_ladder(BenfordSignificandDensity(q), q, default_depth(q))
        for n in range(ladder.depth + 1):
            rows.append((q, n, 1.0 - float(ladder.cumulative[n])))
    return DataSeries("figure1_left", ["q", "n", "prob_N_gt"], rows,
                      _meta(model="benford", q="2;3;5;10", n="0..depth"))


def figure1_middle(grid=FIG1_MIDDLE_GRID):
    q = 10
    ladder = build_ladder(BenfordSignificandDensity(q), q, 1)
    x = (np.arange(grid) + 0.5) / grid
    tail = 1.0 - cond_prob_N_le_array(ladder, x, 1)
    return DataSeries("figure1_middle", ["x", "cond_prob_N_gt_1"], list(zip(x, tail)),
                      _meta(model="benford:q=10", q=q, n=1, grid=f"midpoints of {grid} cells"))


def figure1_right():
    q = 10
    ladder = build_ladder(BenfordSignificandDensity(q), q, 3)
    rows = []
    for n in range(4):
        env = cond_tail_upper_envelope(ladder, n)
        rows.extend((n, x, y) for x, y in zip(env.knots_x, env.knots_y))
    return DataSeries("figure1_right", ["n", "x", "envelope"], rows,
                      _meta(model="benford:q=10", q=q, n="0..3", kind="piecewise-linear knots"))


def _gap_nmax(q):
    return min(10, int(math.floor(math.log(1e6) / math.log(q))))


def figure2_left():
    rows = []
    for q in FIG1_BASES:
        for n in range(1, _gap_nmax(q) + 1):
            rows.append((q, n, benford_digit_gap(q, n)))
    return DataSeries("figure2_left", ["q", "n", "gap"], rows,
                      _meta(model="benford", q="2;3;5;10", n="1..min(10, log_q 1e6)"))


def figure2_right(grid=1000):
    q = 2
    model = BenfordSignificandDensity(q)
    x = (np.arange(grid) + 0.5) / grid
    cols = [x] + [np.asarray(RemainderLaw(model, q, n)._pdf(x)) for n in range(6)]
    return DataSeries("figure2_right", ["x"] + [f"f_{n}" for n in range(6)], list(zip(*cols)),
                      _meta(model="benford:q=2", q=q, n="0..5", grid=f"midpoints of {grid} cells"))


def figure3_curves():
    q = 2
    rows_a, rows_b, rows_c = [], [], []
    for alpha in FIG3_ALPHAS:
        model = PowerDensity(alpha)
        for n in FIG3_N:
            tv, _ = tv_exact(model, q, n)
            rows_a.append((alpha, n, tv))
            rows_b.append((alpha, n, math.log(tv) if tv > 0 else None))
    for alpha in FIG3_SECOND_ORDER_ALPHAS:
        model = PowerDensity(alpha)
        for n in FIG3_N:
            tv, _ = tv_exact(model, q, n)
            so = tv_bound_second_order(model, q, n)
            rows_c.append((alpha, n, math.log(so.per_cell_sup) - math.log(tv)))
    meta = _meta(model="power", q=q, n="0..10")
    return (
        DataSeries("figure3_a", ["alpha", "n", "tv"], rows_a, meta),
        DataSeries("figure3_b", ["alpha", "n", "log_tv"], rows_b, meta),
        DataSeries("figure3_c", ["alpha", "n", "log_second_order_minus_log_tv"], rows_c,
                   _meta(model="power", q=q, n="0..10", term="per-cell sup of |f'|")),
    )


def _gof_meta(model, q, k, seed, reps, sample_size):
    return _meta(model=model, q=q, k=k, n="1..8", seed=seed, replications=reps,
                 sample_size=sample_size, alpha=0.05)


def table1(seed=0, replications=DESK_REPLICATIONS, sample_size=FULL_SAMPLE_SIZE, q=2, threads=None):
    cells = [(n, k) for k in TABLE1_K for n in TABLE_N]
    res = rejection_table(BenfordSignificandDensity(q), q, cells, sample_size, replications,
                          seed=seed, threads=threads)
    rows = [(k, n, res[(n, k)].rejection_rate, res[(n, k)].standard_error) for n, k in cells]
    return DataSeries("table1", ["k", "n", "rejection_rate", "standard_error"], rows,
                      _gof_meta(f"benford:q={q}", q, "1;2;3", seed, replications, sample_size))


def table2(seed=0, replications=DESK_REPLICATIONS, sample_size=FULL_SAMPLE_SIZE, q=2, threads=None):
    rows = []
    cells = [(n, TABLE2_K) for n in TABLE_N]
    for i, alpha in enumerate(TABLE2_ALPHAS):
        # one child seed per row so rows are independent of each other
        res = rejection_table(PowerDensity(alpha), q, cells, sample_size, replications,
                              seed=[seed, i], threads=threads)
        rows.extend((alpha, n, res[(n, k)].rejection_rate, res[(n, k)].standard_error)
                    for n, k in cells)
    return DataSeries("table2", ["alpha", "n", "rejection_rate", "standard_error"], rows,
                      _gof_meta("power", q, TABLE2_K, seed, replications, sample_size))


def reproduce_all(outdir, seed=0, full=False, threads=None):
    """Write every figure and table dataset into ``outdir``; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    reps = FULL_REPLICATIONS if full else DESK_REPLICATIONS
    series = [figure1_left(), figure1_middle(), figure1_right(), figure2_left(), figure2_right()]
    series.extend(figure3_curves())
    series.append(table1(seed, reps, threads=threads))
    series.append(table2(seed, reps, threads=threads))
    paths = []
    for s in series:
        path = outdir / f"{s.name}.csv"
        s.write(path)
        paths.append(path)
    return paths
