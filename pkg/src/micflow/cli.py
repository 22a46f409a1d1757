"""Command-line interface: ``micflow {compute,explore,population,experiment}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from .core import Sample
from .equichar import EstimatorConfig, PreparedSample, mic_e, tic_e
from .functions import get_function
from .inference import MIN_ROWS, is_degenerate, pair_scan, prepared_permutation_test
from .parallel import ENV_THREADS, resolve_threads
from .population import (DiscretizationConfig, FunctionMixture, IndependentUniform, boundary,
                         coarsen, discretize)
from .reporting import save_table, write_table

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

INDEPENDENT = "independent"
EXPLORE_COLUMNS = ["var_a", "var_b", "n_used", "mic_e", "tic_e", "p_value", "q_value", "passes"]

log = logging.getLogger("micflow")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers


def _read_csv(path: str) -> dict[str, np.ndarray]:
    """Named columns as floats; cells that do not parse become NaN."""
    try:
        with open(path, newline="") as fh:
            records = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if not records:
        raise UsageError(f"{path} is empty")
    header = [h.strip() for h in records[0]]
    if len(set(header)) != len(header):
        raise UsageError(f"{path} has duplicate column names")
    cols: dict[str, list[float]] = {h: [] for h in header}
    for rec in records[1:]:
        for i, h in enumerate(header):
            cell = rec[i].strip() if i < len(rec) else ""
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            cols[h].append(v if math.isfinite(v) else math.nan)
    return {h: np.asarray(v, dtype=float) for h, v in cols.items()}


def _estimator(args) -> EstimatorConfig:
    try:
        return EstimatorConfig(args.alpha, args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _log_config(command: str, cfg: dict) -> None:
    log.info("resolved config %s", json.dumps({"command": command, **cfg}, sort_keys=True))


def _emit(rows, columns, out_path: str | None) -> None:
    if out_path:
        save_table(rows, out_path, columns)
    else:
        write_table(rows, sys.stdout, columns)


# --------------------------------------------------------------------------
# commands


def cmd_compute(args) -> int:
    """MICe, TICe and a permutation p-value for one column pair."""
    est = _estimator(args)
    if args.perms < 19:
        raise UsageError("--perms must be >= 19")
    cols = _read_csv(args.input)
    for name in (args.x, args.y):
        if name not in cols:
            raise UsageError(f"column {name!r} not found; available: {', '.join(cols)}")
    x, y = cols[args.x], cols[args.y]
    ok = np.isfinite(x) & np.isfinite(y)
    n = int(ok.sum())
    if n < MIN_ROWS:
        raise DataError(f"only {n} usable rows for ({args.x}, {args.y}); need {MIN_ROWS}")
    threads = args.threads
    _log_config("compute", {"input": args.input, "x": args.x, "y": args.y, "alpha": est.alpha,
                            "c": est.c, "seed": args.seed, "perms": args.perms, "threads": threads})
    sample = Sample(x[ok], y[ok])
    prepared = PreparedSample(sample)
    res, tri = prepared_permutation_test(prepared, is_degenerate(sample), est, args.perms,
                                         args.seed, "tic_e", threads)
    if tri is None:
        tri = prepared.triangle(est)
    k, l = tri.argmax()
    row = {"x": args.x, "y": args.y, "n": n, "B": est.budget(n), "alpha": est.alpha, "c": est.c,
           "mic_e": mic_e(tri), "tic_e": tic_e(tri), "p_value": res.p_value,
           "permutations": args.perms, "seed": args.seed, "argmax_k": k, "argmax_l": l}
    write_table([row], sys.stdout)
    return EXIT_OK


def cmd_explore(args) -> int:
    """All-pairs scan: filter by TICe q-value, rank by MICe."""
    est = _estimator(args)
    if args.perms < 19:
        raise UsageError("--perms must be >= 19")
    if not 0 < args.fdr <= 1:
        raise UsageError("--fdr must lie in (0, 1]")
    cols = _read_csv(args.input)
    numeric = {h: v for h, v in cols.items() if np.isfinite(v).any()}
    if len(numeric) < 2:
        raise DataError(f"need at least 2 numeric columns, found {len(numeric)}")
    threads = args.threads
    _log_config("explore", {"input": args.input, "alpha": est.alpha, "c": est.c, "seed": args.seed,
                            "perms": args.perms, "fdr": args.fdr, "out": args.out,
                            "threads": threads})
    rows = pair_scan(numeric, est, args.perms, args.fdr, args.seed, threads)
    for r in rows:
        if r.note:
            log.warning("pair (%s, %s): %s", r.var_a, r.var_b, r.note)
    _emit([r.__dict__ for r in rows], EXPLORE_COLUMNS, args.out)
    passing = sum(r.passes for r in rows)
    summary = (f"pairs={len(rows)} passing={passing} fdr={args.fdr:g} "
               f"permutations={args.perms} seed={args.seed}")
    print(summary, file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_population(args) -> int:
    """MIC* and boundary values of an analytic density, with a refinement check."""
    if args.function == INDEPENDENT:
        density = IndependentUniform()
    else:
        try:
            f = get_function(args.function)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        if args.sigma < 0:
            raise UsageError("--sigma must be >= 0")
        density = FunctionMixture(f, args.n_centers, args.sigma, args.noise, args.x_design)
    try:
        cfg = DiscretizationConfig(args.m, args.kmax, args.kmax, min(args.master, args.m))
        coarse = DiscretizationConfig(args.m // 2, args.kmax, args.kmax, min(args.master, args.m // 2))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _log_config("population", {"function": args.function, "sigma": args.sigma, "noise": args.noise,
                               "x_design": args.x_design, "m": args.m, "kmax": args.kmax,
                               "master": cfg.master, "n_centers": args.n_centers})
    mass = discretize(density, args.m)
    fine = boundary(density, cfg, mass=mass)
    half = boundary(density, coarse, mass=coarsen(mass.cells, args.m // 2, args.m // 2))
    base = {"function": args.function, "sigma": args.sigma, "noise": args.noise, "m": args.m}
    rows = [{**base, "record": "mic_star", "index": "", "value": fine.value},
            {**base, "record": "refinement_delta", "index": args.m // 2,
             "value": abs(fine.value - half.value)}]
    rows += [{**base, "record": "boundary_row", "index": k, "value": float(fine.rows[k])}
             for k in range(2, args.kmax + 1)]
    rows += [{**base, "record": "boundary_col", "index": k, "value": float(fine.cols[k])}
             for k in range(2, args.kmax + 1)]
    write_table(rows, sys.stdout)
    return EXIT_OK


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"config {path} is not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must be a mapping of keys to values")
    return raw


def cmd_experiment(args) -> int:
    """Run one experiment protocol and write its CSV reports and figure."""
    from .harness import experiments as ex

    kinds = {
        "bias-variance": (ex.BiasVarianceConfig, ex.bias_variance_experiment),
        "equitability": (ex.EquitabilityConfig, ex.equitability_experiment),
        "power": (ex.PowerConfig, ex.power_experiment),
    }
    cfg_cls, run = kinds[args.kind]
    raw = _load_config(args.config)
    if args.paper_scale:
        raw["paper_scale"] = True
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = cfg_cls.from_mapping(raw)
    except ex.ConfigError as exc:
        raise UsageError(f"invalid config: {exc}") from None
    threads = args.threads
    resolved = {**cfg.to_dict(), "threads": threads}
    _log_config("experiment", resolved)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run(cfg, threads)
    stem = cfg.KIND
    (out / "resolved_config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    save_table(report.rows, out / f"{stem}.csv")
    save_table(report.summary, out / f"{stem}_summary.csv")
    written = [f"{stem}.csv", f"{stem}_summary.csv", "resolved_config.json"]
    if not args.no_plots:
        from .plotting import FIGURES

        FIGURES[stem](report, out / f"{stem}.svg")
        written.append(f"{stem}.svg")
    print(f"kind={stem} rows={len(report.rows)} seed={cfg.seed} "
          f"replicates={cfg.total_replicates} out={out} files={','.join(written)}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_estimator(p) -> None:
    p.add_argument("--alpha", type=float, default=0.6, help="grid budget exponent (default 0.6)")
    p.add_argument("--c", type=float, default=5.0, help="clump factor (default 5)")


def _add_common(p) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker pool size (default ${ENV_THREADS} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="micflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"micflow {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="statistics and p-value for one column pair")
    p.add_argument("input", help="csv file with a header row")
    p.add_argument("--x", required=True, help="x column name")
    p.add_argument("--y", required=True, help="y column name")
    _add_estimator(p)
    p.add_argument("--seed", type=int, default=0, help="permutation seed (default 0)")
    p.add_argument("--perms", type=int, default=999, help="permutations (default 999)")
    _add_common(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("explore", help="scan all column pairs, filter by q-value, rank by MICe")
    p.add_argument("input", help="csv file with a header row")
    _add_estimator(p)
    p.add_argument("--perms", type=int, default=999, help="permutations per pair (default 999)")
    p.add_argument("--fdr", type=float, default=0.05, help="q-value threshold (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="master seed; pair j uses (seed, j)")
    p.add_argument("--out", default=None, help="results csv (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("population", help="MIC* of a noisy functional relationship")
    p.add_argument("--function", required=True,
                   help=f"registry function id, or '{INDEPENDENT}' for the independent density")
    p.add_argument("--sigma", type=float, default=0.0, help="noise standard deviation")
    p.add_argument("--noise", choices=("XY", "Y"), default="XY")
    p.add_argument("--x-design", choices=("equal_arc", "uniform"), default="equal_arc")
    p.add_argument("--m", type=int, default=2048, help="quantile grid size (power of two)")
    p.add_argument("--kmax", type=int, default=32, help="largest boundary index")
    p.add_argument("--master", type=int, default=256, help="rows searched per boundary entry")
    p.add_argument("--n-centers", type=int, default=1024, help="mixture components along f")
    p.set_defaults(func=cmd_population)

    p = sub.add_parser("experiment", help="run an experiment protocol from a YAML config")
    p.add_argument("kind", choices=("bias-variance", "equitability", "power"))
    p.add_argument("--config", required=True, help="YAML config; unknown keys are errors")
    p.add_argument("--out-dir", required=True, help="created if missing")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--paper-scale", action="store_true",
                   help="500 replicates (bias-variance, equitability) or 1000 (power)")
    p.add_argument("--no-plots", action="store_true", help="skip the SVG figure")
    _add_common(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if hasattr(args, "threads"):
            try:
                args.threads = resolve_threads(args.threads)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        return args.func(args)
    except UsageError as exc:
        print(f"micflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"micflow: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
