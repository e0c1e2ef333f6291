"""``l1recover`` command-line front end.

Values are resolved in three layers: built-in defaults, then an optional
flat ``key = value`` config file (``--config``), then command-line flags.
The effective configuration is echoed into a JSON manifest written next to
every CSV output, which is enough to replay the run.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as l1io
from .certificates import uup_audit
from .ensembles import EnsembleKind, make_ensemble
from .errors import (
    DegenerateDraw,
    InconsistentConstraints,
    L1RecoverError,
    NotPositiveDefinite,
    SingularGram,
    UsageError,
)
from .experiments import (
    ResultTable,
    TrialGrid,
    encode_decode,
    erp_batch,
    error_scaling,
    exact_recovery_curve,
    manifest,
    omega_concentration,
    singular_value_concentration,
    werp_batch,
    xnorm_concentration,
)
from .l1solver import SolverOptions, solve_bp, solve_bp_quantized
from .signals import sparse_signal

OUTPUT_DIR_ENV = "L1RECOVER_OUTPUT_DIR"

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

COMMANDS = {
    "recover": "solve basis pursuit for a stored matrix and measurement vector",
    "audit-uup": "restricted-spectrum audit over small column subsets",
    "audit-erp": "batch of least-squares certificates on random supports",
    "audit-werp": "batch of weak certificate bounds",
    "phase": "exact-recovery success rate against sparsity",
    "scaling": "error decay of weak-lp signals against measurement count",
    "concentration": "singular-value, row-count or X-norm concentration suite",
    "encode-decode": "measure, quantize, optionally drop rows, and decode a signal",
}


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------


def parse_range(text: str) -> tuple[float, ...]:
    """``"2..24..2"`` (inclusive, default step 1) or ``"32,64,128"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            parts = [float(p) for p in text.split("..")]
            if len(parts) == 2:
                parts.append(1.0)
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + i * step for i in range(max(n, 0)))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"cannot parse range {text!r}") from None


def _int_list(text) -> tuple[int, ...]:
    vals = parse_range(text)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers in {text!r}")
    return tuple(int(v) for v in vals)


def _num(v: float):
    return int(v) if float(v).is_integer() else float(v)


def _number_list(text) -> tuple:
    return tuple(_num(v) for v in parse_range(text))


# Every key any command accepts: (converter, default).
SCHEMA: dict[str, tuple] = {
    "ensemble": (str, "gaussian"),
    "N": (int, 256),
    "K": (_number_list, (64,)),
    "tau": (float, None),
    "seed": (int, 0),
    "trials": (int, 100),
    "workers": (int, 1),
    "output": (str, None),
    "tol": (float, 1e-9),
    "max_iter": (int, 200),
    # recover / encode-decode
    "matrix": (str, None),
    "y": (str, None),
    "signal": (str, None),
    "q": (float, 0.0),
    "loss": (float, 0.0),
    # audits
    "alpha": (float, None),
    "m": (int, None),
    "lambda_factor": (float, None),
    "bounds": (_number_list, (0.5, 1.5)),
    "mode": (str, "auto"),
    "audit_trials": (int, 1000),
    "support_size": (int, 3),
    "threshold": (float, 0.5),
    "gamma": (float, 1.0),
    # experiment grids
    "sparsity": (_int_list, (2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24)),
    "p": (_number_list, (0.5, 0.75, 1.0)),
    "R": (float, 1.0),
    "abscissa": (str, "log"),
    # concentration
    "suite": (str, "all"),
    "rows": (int, 200),
    "cols": (int, 50),
    "xnorm_N": (_int_list, (64, 256, 1024)),
}

_FLAG_NAMES = {"N": "-N", "K": "-K", "output": "-o"}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self["tol"], max_iter=self["max_iter"])

    def single_K(self) -> float:
        if len(self["K"]) != 1:
            raise UsageError(f"{self.command} takes a single K, got {list(self['K'])}")
        return self["K"][0]

    def effective_K(self) -> float:
        """K, or tau * N when a sampling rate is given for the Fourier ensemble."""
        if self["tau"] is not None:
            return self["tau"] * self["N"]
        return self.single_K()

    def output_path(self, default_name: str) -> Path:
        out = self["output"]
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        path = Path(out) if out else base / default_name
        if out and not path.is_absolute() and OUTPUT_DIR_ENV in os.environ and path.parent == Path("."):
            path = base / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def jsonable(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.values.items()}


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="l1recover",
        description="Sparse recovery by l1 minimization: decoding, certificate audits and Monte-Carlo experiments.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, summary in COMMANDS.items():
        p = sub.add_parser(name, help=summary, description=summary,
                           argument_default=argparse.SUPPRESS, allow_abbrev=False)
        p.add_argument("--config", help="flat key = value file; flags override it")
        for key in SCHEMA:
            flag = _FLAG_NAMES.get(key, "--" + key.replace("_", "-"))
            names = [flag] if flag.startswith("--") else [flag, "--" + key.replace("_", "-")]
            p.add_argument(*names, dest=key, metavar=key.upper())
    return parser


def read_config_file(path) -> dict:
    text = Path(path).read_text()
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[l1recover]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key.replace("-", "_")] = value
    return out


def _canonical(key: str) -> str:
    if key in SCHEMA:
        return key
    for k in SCHEMA:
        if k.lower() == key.lower():
            return k
    raise UsageError(f"unknown configuration key {key!r}")


def _convert(key: str, raw):
    conv, _ = SCHEMA[key]
    if raw is None:
        return None
    try:
        return conv(raw)
    except UsageError:
        raise
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key!r}: {raw!r}") from None


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    if v["N"] < 1:
        raise UsageError(f"N must be >= 1, got {v['N']}")
    if any(k <= 0 for k in v["K"]):
        raise UsageError(f"K must be positive, got {list(v['K'])}")
    if v["trials"] < 1:
        raise UsageError("trials must be >= 1")
    if v["workers"] < 1:
        raise UsageError("workers must be >= 1")
    if v["tau"] is not None and not 0.0 < v["tau"] < 1.0:
        raise UsageError("tau must lie in (0, 1)")
    try:
        EnsembleKind(v["ensemble"])
    except ValueError:
        raise UsageError(f"unknown ensemble {v['ensemble']!r}") from None
    if v["q"] < 0:
        raise UsageError("q must be >= 0")
    if not 0.0 <= v["loss"] < 1.0:
        raise UsageError("loss must lie in [0, 1)")
    if len(v["bounds"]) != 2 or not 0 <= v["bounds"][0] < v["bounds"][1]:
        raise UsageError(f"bounds must be 'a,b' with 0 <= a < b, got {list(v['bounds'])}")
    if v["mode"] not in ("auto", "exhaustive", "sampled"):
        raise UsageError(f"unknown audit mode {v['mode']!r}")
    if v["abscissa"] not in ("log", "log6"):
        raise UsageError(f"unknown abscissa {v['abscissa']!r}")
    if v["suite"] not in ("all", "singular", "omega", "xnorm"):
        raise UsageError(f"unknown suite {v['suite']!r}")
    if cfg.command == "recover" and (v["matrix"] is None or v["y"] is None):
        raise UsageError("recover needs --matrix and --y")


def parse_config(argv=None) -> RunConfig:
    """Resolve defaults, config file and flags into a validated RunConfig."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        raise UsageError("no command given")
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    if command is None:
        raise UsageError("no command given")
    values = {k: d for k, (_, d) in SCHEMA.items()}
    config_path = ns.pop("config", None)
    if config_path:
        try:
            file_values = read_config_file(config_path)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        for key, raw in file_values.items():
            key = _canonical(key)
            values[key] = _convert(key, raw)
    for key, raw in ns.items():
        values[key] = _convert(key, raw)
    cfg = RunConfig(command, values)
    _validate(cfg)
    return cfg


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _write_outputs(cfg: RunConfig, table: ResultTable, default_name: str, started: float,
                   grid: TrialGrid | None = None, extra: dict | None = None) -> Path:
    path = cfg.output_path(default_name)
    table.to_csv(path)
    _write_manifest(cfg, path, started, grid, extra)
    return path


def _write_manifest(cfg: RunConfig, path: Path, started: float, grid=None, extra=None) -> Path:
    mpath = path.with_name(path.stem + ".manifest.json")
    l1io.write_json(mpath, manifest(cfg.command, cfg.jsonable(), grid, time.perf_counter() - started, extra))
    return mpath


def _measurement(cfg: RunConfig):
    if cfg["matrix"]:
        return l1io.read_measurement(cfg["matrix"])
    return make_ensemble(cfg["ensemble"], cfg["N"], cfg.effective_K(), cfg["seed"])


def _cmd_recover(cfg: RunConfig, started: float) -> int:
    M = l1io.read_measurement(cfg["matrix"])
    y = l1io.read_signal_csv(cfg["y"])
    q = cfg["q"]
    rec = solve_bp_quantized(M, y, q, cfg.solver_options) if q > 0 else solve_bp(M, y, cfg.solver_options)
    path = cfg.output_path("fsharp.csv")
    l1io.write_signal_csv(path, rec.fsharp)
    info = {
        "status": rec.status.value,
        "l1value": rec.l1value,
        "duality_gap": rec.duality_gap,
        "primal_residual": rec.primal_residual,
        "dual_residual": rec.dual_residual,
        "iterations": rec.iterations,
    }
    _write_manifest(cfg, path, started, extra={"result": info})
    print(f"status {rec.status.value}")
    print(f"l1 value {rec.l1value!r}")
    print(f"duality gap {rec.duality_gap!r}")
    return EXIT_OK if rec.ok else EXIT_NUMERICAL


def _cmd_audit_uup(cfg: RunConfig, started: float) -> int:
    M = _measurement(cfg)
    lam = cfg["lambda_factor"] if cfg["lambda_factor"] is not None else math.log(M.N)
    if cfg["alpha"] is not None:
        alpha = cfg["alpha"]
    elif cfg["m"] is not None:
        alpha = cfg["m"] * lam / M.expected_K
    else:
        raise UsageError("audit-uup needs --alpha or --m")
    report = uup_audit(M, alpha, lam, tuple(cfg["bounds"]), cfg["mode"], cfg["seed"], cfg["audit_trials"])
    path = cfg.output_path("uup.csv")
    l1io.write_uup_csv(path, report)
    summary = report.summary()
    l1io.write_json(path.with_name(path.stem + ".summary.json"), summary)
    _write_manifest(cfg, path, started, extra={"summary": summary})
    print(f"{report.mode} audit: {len(report.subsets)} subsets, {report.violations} violations")
    return EXIT_OK


def _cmd_audit_erp(cfg: RunConfig, started: float) -> int:
    table = erp_batch(cfg["N"], cfg.effective_K(), cfg["support_size"], cfg["trials"], cfg["seed"],
                      cfg["ensemble"], cfg["threshold"], cfg["workers"])
    _write_outputs(cfg, table, "erp.csv", started)
    print(f"pass rate {table.value('pass_rate')!r}")
    return EXIT_OK


def _cmd_audit_werp(cfg: RunConfig, started: float) -> int:
    table = werp_batch(cfg["N"], cfg.effective_K(), cfg["support_size"], cfg["gamma"], cfg["trials"],
                       cfg["seed"], cfg["ensemble"], cfg["workers"])
    _write_outputs(cfg, table, "werp.csv", started)
    print(f"pass rate {table.value('pass_rate')!r}")
    return EXIT_OK


def _grid(cfg: RunConfig, **kw) -> TrialGrid:
    Ks = (cfg["tau"] * cfg["N"],) if cfg["tau"] is not None else cfg["K"]
    return TrialGrid(cfg["ensemble"], cfg["N"], Ks, trials=cfg["trials"], base_seed=cfg["seed"], **kw)


def _cmd_phase(cfg: RunConfig, started: float) -> int:
    grid = _grid(cfg, sparsities=cfg["sparsity"])
    table = exact_recovery_curve(grid, cfg["workers"], opts=cfg.solver_options)
    _write_outputs(cfg, table, "phase.csv", started, grid)
    for row in table.select("phase_transition_sparsity"):
        print(f"K={row['K']}: success drops below 1/2 at |T|={row['value']}")
    return EXIT_OK


def _cmd_scaling(cfg: RunConfig, started: float) -> int:
    grid = _grid(cfg, p_values=cfg["p"], R=cfg["R"])
    table = error_scaling(grid, cfg["workers"], cfg["abscissa"], opts=cfg.solver_options)
    _write_outputs(cfg, table, "scaling.csv", started, grid)
    for row in table.select("fitted_slope"):
        target = table.value("target_slope", p=row["p"])
        print(f"p={row['p']}: slope {row['value']:.3f} +/- {row['stderr']:.3f} (target {target:.3f})")
    return EXIT_OK


def _cmd_concentration(cfg: RunConfig, started: float) -> int:
    suite = cfg["suite"]
    table = ResultTable()
    if suite in ("all", "singular"):
        table.extend(singular_value_concentration(cfg["rows"], cfg["cols"], cfg["trials"], cfg["seed"]))
    if suite in ("all", "omega"):
        table.extend(omega_concentration(cfg["N"], cfg["tau"] or 0.25, cfg["trials"], cfg["seed"]))
    if suite in ("all", "xnorm"):
        for n in cfg["xnorm_N"]:
            table.extend(xnorm_concentration(np.full(n, 1.0 / math.sqrt(n)), cfg["trials"], cfg["seed"]))
    _write_outputs(cfg, table, "concentration.csv", started)
    failed = [r for r in table.rows if r["statistic"].endswith(("_pass", "bounded")) and not r["value"]]
    print(f"{len(failed)} failing checks")
    return EXIT_OK


def _cmd_encode_decode(cfg: RunConfig, started: float) -> int:
    if cfg["signal"]:
        f = l1io.read_signal_csv(cfg["signal"]).real
    else:
        f, _ = sparse_signal(cfg["N"], cfg["support_size"], (cfg["seed"], 1))
    K = cfg.single_K() if cfg["tau"] is None else cfg["tau"] * f.size
    out = encode_decode(f, K, cfg["q"], (cfg["seed"], 0), cfg["loss"], cfg["ensemble"], cfg.solver_options)
    path = cfg.output_path("decoded.csv")
    l1io.write_signal_csv(path, out.pop("fsharp"))
    _write_manifest(cfg, path, started, extra={"result": out})
    print(f"rows received {out['rows_received']} of {out['rows_sent']}")
    print(f"distortion {out['distortion']!r} (relative {out['relative_distortion']!r})")
    return EXIT_OK if out["status"] == "optimal" else EXIT_NUMERICAL


_DISPATCH = {
    "recover": _cmd_recover,
    "audit-uup": _cmd_audit_uup,
    "audit-erp": _cmd_audit_erp,
    "audit-werp": _cmd_audit_werp,
    "phase": _cmd_phase,
    "scaling": _cmd_scaling,
    "concentration": _cmd_concentration,
    "encode-decode": _cmd_encode_decode,
}


def dispatch(cfg: RunConfig) -> int:
    started = time.perf_counter()
    try:
        return _DISPATCH[cfg.command](cfg, started)
    except UsageError as exc:
        print(f"l1recover {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotPositiveDefinite, SingularGram, DegenerateDraw, InconsistentConstraints) as exc:
        print(f"l1recover {cfg.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (L1RecoverError, OSError, ValueError) as exc:
        print(f"l1recover {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"l1recover: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
