"""``spde`` command line: run experiments from YAML configs and merge their results.

Exit codes: 0 success, 2 invalid configuration or incompatible merge,
3 numerical failure, 4 file-system failure. Failures also leave a
machine-readable ``error.json`` (in the run directory if it exists, else in
the output root).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, MergeError, PathmildError
from . import config as config_mod
from .experiments import JOBS, Problem
from .tables import merge_runs, write_run

__all__ = ["main", "run_experiment", "bundled_config"]

OUTPUT_ENV = "SPDE_OUTPUT_ROOT"
EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``name`` without ``.yaml``)."""
    path = resources.files("pathmild") / "configs" / f"{name}.yaml"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return Path(str(path))


def _resolve_config(arg: str) -> Path:
    p = Path(arg)
    if p.exists() or p.suffix:
        return p
    return bundled_config(arg)


def run_experiment(cfg: dict, out_dir: Path | None = None) -> Path:
    """Run every path of a validated config and write the run directory."""
    problem = Problem.from_config(cfg)
    job = JOBS[cfg["experiment"]]
    paths = range(cfg["first_path"], cfg["first_path"] + cfg["paths"])
    threads = cfg["threads"] or os.cpu_count() or 1
    if threads == 1:
        results = [job(problem, p) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda p: job(problem, p), paths))
    rid = config_mod.run_id(cfg)
    out_dir = out_dir or output_root() / f"{cfg['name']}-{cfg['experiment']}-{rid}"
    manifest = {
        "schema_version": config_mod.SCHEMA_VERSION,
        "run_id": rid,
        "compatibility_key": config_mod.compatibility_key(cfg),
        "experiment": cfg["experiment"],
        "sources": [{"master_seed": cfg["master_seed"], "first_path": cfg["first_path"],
                     "paths": cfg["paths"], "run_id": rid}],
    }
    write_run(out_dir, cfg, manifest, [r for rows in results for r in rows])
    return out_dir


def _error(code: int, category: str, message: str, where: Path | None, key=None) -> int:
    record = {"exit_code": code, "category": category, "message": message}
    if key is not None:
        record["key"] = key
    text = json.dumps(record, indent=2, sort_keys=True)
    print(text, file=sys.stderr)
    try:
        where = where or output_root()
        where.mkdir(parents=True, exist_ok=True)
        (where / "error.json").write_text(text + "\n")
    except OSError:
        pass
    return code


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spde", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def experiment(name, help_, forced):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="YAML config file or bundled config name")
        sp.add_argument("--seed", type=int, help="override master_seed")
        sp.add_argument("--paths", type=int, help="override the number of paths")
        sp.add_argument("--threads", type=int, help="override the worker count")
        sp.add_argument("--output", type=Path,
                        help=f"run directory (default: ${OUTPUT_ENV}/<name>-<experiment>-<id>)")
        if name == "convergence":
            sp.add_argument("--levels", type=int, help="number of dyadic refinement levels")
        sp.set_defaults(experiment=forced)

    experiment("run", "run the experiment named in the config", None)
    experiment("simulate", "solution snapshots and residuals", "simulate")
    experiment("compare", "matched-path multi-method comparison", "compare")
    experiment("regularity", "seminorm and exponent sweeps", "regularity")
    experiment("conditions", "resolvent and Hoelder condition reports", "conditions")
    experiment("convergence", "dyadic refinement with bridge-refined drivers", "convergence")
    agg = sub.add_parser("aggregate", help="merge run directories and recompute statistics")
    agg.add_argument("dirs", nargs="+", type=Path)
    agg.add_argument("--output", type=Path, help="output directory (default: under the root)")
    sub.add_parser("configs", help="list bundled configs")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "configs":
        for p in sorted((resources.files("pathmild") / "configs").iterdir()):
            if p.name.endswith(".yaml"):
                print(p.name[:-5])
        return 0
    if args.command == "aggregate":
        return _aggregate(args)
    out_dir = args.output
    try:
        cfg = config_mod.load(_resolve_config(args.config))
        cfg = config_mod.apply_overrides(cfg, args.seed, args.paths, args.threads,
                                         args.experiment, getattr(args, "levels", None))
    except ConfigurationError as exc:
        return _error(EXIT_CONFIG, exc.category, str(exc), out_dir, getattr(exc, "key", None))
    except OSError as exc:
        return _error(EXIT_IO, "io-failure", str(exc), out_dir)
    try:
        out = run_experiment(cfg, out_dir)
    except ConfigurationError as exc:
        return _error(EXIT_CONFIG, exc.category, str(exc), out_dir, getattr(exc, "key", None))
    except PathmildError as exc:
        return _error(EXIT_NUMERICAL, exc.category, str(exc), out_dir)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return _error(EXIT_NUMERICAL, "numerical-failure", f"{type(exc).__name__}: {exc}",
                      out_dir)
    except OSError as exc:
        return _error(EXIT_IO, "io-failure", str(exc), out_dir)
    print(out)
    return 0


def _aggregate(args) -> int:
    try:
        cfg, manifest, rows = merge_runs(args.dirs)
        out = args.output or output_root() / f"aggregate-{manifest['run_id']}"
        write_run(out, cfg, manifest, rows)
    except MergeError as exc:
        return _error(EXIT_CONFIG, exc.category, str(exc), args.output)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        return _error(EXIT_IO, "io-failure", f"{type(exc).__name__}: {exc}", args.output)
    print(out)
    return 0
