"""Command-line runner for the named experiments.

Usage::

    recentering <experiment> --config CONFIG.toml [--out DIR] [--seed N]
                             [--format json|csv] [--jobs N]

Exit status: 0 when every check passes, 1 when a check fails, 2 for an
invalid configuration, 3 for a numerical failure.
"""

import argparse
from dataclasses import dataclass, field
import json
import logging
import os
import sys
import time

from . import __version__
from ._accel import backend
from .errors import InputError, NumericalError
from .experiments import RUNNERS, SCHEMAS, ConfigError, validate_parameters
from .reporting import dumps, fmt_float, write_table

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["ExperimentConfig", "ReportBundle", "load_config", "run_experiment", "emit_report", "main"]

logger = logging.getLogger("recentering")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
_TOP_KEYS = {"experiment", "seed", "output_dir", "parameters"}


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, data):
        unknown = sorted(set(data) - _TOP_KEYS)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key (allowed: {sorted(_TOP_KEYS)})")
        if "experiment" not in data:
            raise ConfigError("experiment: missing")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
        params = validate_parameters(data["experiment"], data.get("parameters", {}))
        return cls(experiment=data["experiment"], parameters=params, seed=seed,
                   output_dir=str(data.get("output_dir", "results")))


@dataclass
class ReportBundle:
    experiment: str
    parameters: dict
    seed: int
    metrics: dict
    checks: dict
    tables: dict
    wall_time: float

    @property
    def passed(self):
        return all(self.checks.values())

    def summary(self):
        """The byte-stable part of the report (wall time is kept out)."""
        return {"experiment": self.experiment, "parameters": self.parameters, "seed": self.seed,
                "metrics": self.metrics, "checks": self.checks, "passed": self.passed}


def load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def run_experiment(config, jobs=1):
    """Validate, dispatch and collect a :class:`ReportBundle`."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    params = validate_parameters(config.experiment, config.parameters)
    t0 = time.perf_counter()
    metrics, tables, checks = RUNNERS[config.experiment](params, config.seed, jobs=jobs)
    wall = time.perf_counter() - t0
    return ReportBundle(experiment=config.experiment, parameters=params, seed=config.seed,
                        metrics=metrics, checks={k: bool(v) for k, v in checks.items()},
                        tables=tables, wall_time=wall)


def emit_report(bundle, out_dir, fmt="json"):
    """Write tables and the summary under ``out_dir``; returns the written paths.

    ``fmt='json'`` writes ``summary.json``; ``fmt='csv'`` writes
    ``summary.csv`` with one ``key,value`` row per metric and check.  Wall
    time goes to ``timing.json``, the only file that varies between runs.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for stem, (cols, rows) in sorted(bundle.tables.items()):
        p = os.path.join(out_dir, f"{stem}.csv")
        write_table(p, cols, rows)
        paths.append(p)
    if fmt == "json":
        p = os.path.join(out_dir, "summary.json")
        with open(p, "w", newline="\n") as fh:
            fh.write(dumps(bundle.summary()))
    elif fmt == "csv":
        p = os.path.join(out_dir, "summary.csv")
        rows = [("experiment", bundle.experiment), ("seed", bundle.seed)]
        rows += [(f"metrics.{k}", _scalar(v)) for k, v in sorted(bundle.metrics.items())]
        rows += [(f"checks.{k}", v) for k, v in sorted(bundle.checks.items())]
        rows.append(("passed", bundle.passed))
        write_table(p, ["key", "value"], rows)
    else:
        raise ConfigError(f"format: expected json or csv, got {fmt!r}")
    paths.append(p)
    t = os.path.join(out_dir, "timing.json")
    with open(t, "w") as fh:
        fh.write(json.dumps({"wall_time": bundle.wall_time, "backend": backend()}, sort_keys=True) + "\n")
    return paths


def _scalar(v):
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, (list, tuple, dict)):
        return dumps(v, indent=0).replace("\n", "")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="recentering", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in sorted(SCHEMAS):
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="TOML experiment config")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"experiment: config is for {cfg.experiment!r}, "
                              f"subcommand is {args.experiment!r}")
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {args.seed}")
            cfg.seed = args.seed
        if args.jobs < 1:
            raise ConfigError(f"jobs: must be >= 1, got {args.jobs}")
        out = args.out or cfg.output_dir
        bundle = run_experiment(cfg, jobs=args.jobs)
        emit_report(bundle, out, args.format)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(dumps(exc.diagnostics), file=sys.stderr)
        return EXIT_NUMERICAL
    for name, ok in sorted(bundle.checks.items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"{bundle.experiment}: {'pass' if bundle.passed else 'fail'} "
          f"({bundle.wall_time:.2f} s, backend {backend()}) -> {out}")
    return EXIT_OK if bundle.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
