"""Trial grids, result tables and a deterministic parallel map.

Every trial is keyed by ``(cell, trial index)`` and derives its random
streams from ``(base_seed, trial index)`` alone, so trials may run in any
order on any number of workers. Results are always reduced in task order,
which makes the written CSV byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import InvalidShape
from ..seeding import Seed


@dataclass(frozen=True)
class TrialGrid:
    ensemble: str = "gaussian"
    N: int = 256
    K_values: tuple[float, ...] = (64,)
    sparsities: tuple[int, ...] = ()
    p_values: tuple[float, ...] = ()
    R: float = 1.0
    trials: int = 10
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "K_values", tuple(self.K_values))
        object.__setattr__(self, "sparsities", tuple(self.sparsities))
        object.__setattr__(self, "p_values", tuple(self.p_values))
        if self.trials < 1:
            raise InvalidShape("trials must be >= 1")
        if not self.K_values:
            raise InvalidShape("K grid is empty")
        if self.N < 1:
            raise InvalidShape("N must be >= 1")

    @classmethod
    def from_tau(cls, tau_values, N: int, **kw) -> "TrialGrid":
        """Fourier grids are often given by sampling rates; K = tau * N."""
        return cls(N=N, K_values=tuple(t * N for t in tau_values), **kw)

    def measurement_seed(self, trial: int) -> Seed:
        return Seed(self.base_seed, 2 * trial)

    def signal_seed(self, trial: int) -> Seed:
        return Seed(self.base_seed, 2 * trial + 1)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class ResultTable:
    rows: list[dict] = field(default_factory=list)

    def add(self, params: dict, statistic: str, value, stderr=float("nan")) -> None:
        self.rows.append({**params, "statistic": statistic, "value": value, "stderr": stderr})

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)

    @property
    def param_columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in ("statistic", "value", "stderr") and k not in cols:
                    cols.append(k)
        return cols

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        cols = self.param_columns + ["statistic", "value", "stderr"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            w.writerow([_fmt(row.get(c, "")) for c in cols])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    def select(self, statistic: str, **params) -> list[dict]:
        return [
            r for r in self.rows
            if r["statistic"] == statistic and all(r.get(k) == v for k, v in params.items())
        ]

    def value(self, statistic: str, **params):
        hits = self.select(statistic, **params)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {statistic} {params}")
        return hits[0]["value"]


def run_tasks(fn, tasks: list, workers: int = 1) -> list:
    """Map ``fn`` over ``tasks`` preserving order; parallel when workers > 1."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunksize = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunksize))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else float("nan")


def median_stderr(values) -> float:
    """Large-sample standard error of the median, sqrt(pi/2) * sd / sqrt(n)."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size < 2:
        return float("nan")
    return float(math.sqrt(math.pi / 2.0) * v.std(ddof=1) / math.sqrt(v.size))


def fit_slope(x, y) -> tuple[float, float, float]:
    """Least-squares line y = a + b x; returns (slope, slope stderr, intercept)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    if n > 2:
        resid = y - (intercept + slope * x)
        se = math.sqrt(float(resid @ resid) / (n - 2) / sxx)
    else:
        se = float("nan")
    return slope, se, intercept


def manifest(command: str, config: dict, grid: TrialGrid | None = None, wall_time: float | None = None,
             extra: dict | None = None) -> dict:
    import l1recover

    out = {
        "command": command,
        "config": config,
        "versions": {
            "l1recover": l1recover.__version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
            "platform": platform.platform(),
        },
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if grid is not None:
        out["grid"] = asdict(grid)
        out["seeds"] = {
            "base_seed": grid.base_seed,
            "measurement_stream": "2*trial",
            "signal_stream": "2*trial+1",
        }
    if wall_time is not None:
        out["wall_time_seconds"] = wall_time
    if extra:
        out.update(extra)
    return out
