"""Command-line front end.

Subcommands: ingest, simulate, bootstrap, experiment, oracle. Flags can
also be supplied through a JSON config file (``--config``); command-line
flags override config keys, and unknown keys are rejected. All artifacts
are written atomically (temp file + rename) and every JSON output echoes
the resolved config and the library version.

Exit codes: 0 success, 1 usage error, 2 input data error, 3 runtime
budget exceeded. On failure a machine-readable error JSON is printed to
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import __version__
from .bootstrap import (
    BootstrapConfig,
    bootstrap_distribution,
    bootstrap_variance,
    percentile_ci,
)
from .errors import DataError, RdsVarError, UsageError
from .estimators import PopulationTotals
from .exact import check_moment_identity, enumerate_neighbourhood, enumerate_tree
from .experiment import ExperimentConfig, run_full
from .graph import (
    largest_connected_component,
    load_attributes,
    load_edge_list,
    load_summary,
    read_attribute_rows,
)
from .simulate import RdsDesign, read_forest_csv, simulate_rds, write_forest_csv
from .rng import generator

WORKERS_ENV = "RDSVAR_WORKERS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _tool_block() -> dict:
    return {"name": "rdsvar", "version": __version__}


def write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rdsvar-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: str, payload: dict) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2, allow_nan=False) + "\n")


def _parse_pmf(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(Fraction(tok.strip())) for tok in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse pmf {text!r}; expected comma-separated numbers like 1/3,1/6,1/6,1/3")


def _parse_levels(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok.strip()) for tok in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse levels {text!r}")


def _parse_columns(text: str) -> tuple[str, ...]:
    cols = tuple(c.strip() for c in text.split(",") if c.strip())
    if not cols:
        raise UsageError("empty column list")
    return cols


def build_parser() -> _Parser:
    parser = _Parser(prog="rdsvar", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rdsvar {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add(name: str, helptext: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--out", help="output directory (default .)")
        return p

    p = add("ingest", "load and summarize a population network")
    p.add_argument("--edges", help="edge list file")
    p.add_argument("--attrs", help="attribute CSV to validate against the graph")
    p.add_argument("--lcc", action="store_true", default=None, help="restrict to the largest connected component")

    p = add("simulate", "simulate one RDS sample and write the recruitment forest")
    p.add_argument("--edges")
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--coupons", type=int, help="maximum recruits per participant")
    p.add_argument("--pmf", help="recruit-count probabilities, e.g. 1/3,1/6,1/6,1/3")
    p.add_argument("--n", type=int, help="target sample size")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--regime", choices=["without_replacement", "with_replacement_walk"])
    p.add_argument("--no-reseed", action="store_true", default=None, help="fail instead of reseeding dead chains")
    p.add_argument("--lcc", action="store_true", default=None)

    p = add("bootstrap", "bootstrap an estimator over a recruitment forest")
    p.add_argument("--forest", help="forest CSV (id, recruiter, degree at minimum)")
    p.add_argument("--attrs", help="attribute CSV")
    p.add_argument("--attribute", help="attribute column to estimate")
    p.add_argument("--method", choices=["neighbourhood", "tree"])
    p.add_argument("--B", type=int, help="bootstrap replicates")
    p.add_argument("--estimator", choices=["sample_mean", "vh", "ipw"])
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--pool", choices=["recruiters_only", "all_participants"])
    p.add_argument("--tree-seed-mode", choices=["with_replacement", "without_replacement"])
    p.add_argument("--seed", type=int)
    p.add_argument("--population-size", type=int, help="N for the ipw estimator")
    p.add_argument("--total-degree", type=int, help="sum of degrees for the ipw estimator")
    p.add_argument("--edges", help="edge list to derive ipw totals from")
    p.add_argument("--lcc", action="store_true", default=None)
    p.add_argument("--dump-estimates", action="store_true", default=None, help="also write all B estimates as CSV")

    p = add("experiment", "Monte Carlo coverage / width / variance-bias study")
    p.add_argument("--edges")
    p.add_argument("--attrs")
    p.add_argument("--columns", help="comma-separated attribute columns (default: all)")
    p.add_argument("--seeds", type=int)
    p.add_argument("--coupons", type=int)
    p.add_argument("--pmf")
    p.add_argument("--n", type=int)
    p.add_argument("--R", type=int, help="number of replications")
    p.add_argument("--B", type=int, help="bootstrap replicates per replication")
    p.add_argument("--methods", help="comma-separated subset of neighbourhood,tree")
    p.add_argument("--levels", help="comma-separated confidence levels (default 0.95,0.80)")
    p.add_argument("--width-ref", type=int, help="simulations for expected widths (default 5000)")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p.add_argument("--regime", choices=["without_replacement", "with_replacement_walk"])
    p.add_argument("--no-reseed", action="store_true", default=None)
    p.add_argument("--lcc", action="store_true", default=None)

    p = add("oracle", "exact bootstrap distribution of a tiny forest by enumeration")
    p.add_argument("--forest")
    p.add_argument("--attrs")
    p.add_argument("--attribute")
    p.add_argument("--method", choices=["neighbourhood", "tree"])
    p.add_argument("--estimator", choices=["sample_mean", "vh", "ipw"])
    p.add_argument("--pool", choices=["recruiters_only", "all_participants"])
    p.add_argument("--tree-seed-mode", choices=["with_replacement", "without_replacement"])
    p.add_argument("--population-size", type=int)
    p.add_argument("--total-degree", type=int)
    p.add_argument("--check-identity", action="store_true", default=None, help="include balanced-forest moment diagnostics")
    return parser


def _merge_config(parser: _Parser, args: argparse.Namespace) -> dict:
    """Apply config-file values under CLI flags; reject unknown keys."""
    merged = vars(args).copy()
    path = merged.pop("config", None)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise DataError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: invalid JSON config: {e}")
        if not isinstance(file_cfg, dict):
            raise DataError(f"{path}: config must be a JSON object")
        known = set(merged)
        for key, value in file_cfg.items():
            dest = key.replace("-", "_")
            if dest in ("config", "command"):
                raise UsageError(f"config file may not set {key!r}")
            if dest not in known:
                raise UsageError(f"unknown config key {key!r} for command {merged['command']}")
            if merged[dest] is None:
                merged[dest] = value
    return merged


def _require(cfg: dict, *names: str) -> None:
    for name in names:
        if cfg.get(name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {cfg['command']}")


def _outpath(cfg: dict, filename: str) -> str:
    out = cfg.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, filename)


def _load_graph(cfg: dict):
    g = load_edge_list(cfg["edges"])
    if cfg.get("lcc"):
        g = largest_connected_component(g)
    return g


def _echo(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if v is not None and k != "command"}


def _design_from(cfg: dict) -> RdsDesign:
    _require(cfg, "seeds", "coupons", "pmf", "n")
    pmf = _parse_pmf(cfg["pmf"]) if isinstance(cfg["pmf"], str) else tuple(float(x) for x in cfg["pmf"])
    return RdsDesign(
        n_seeds=int(cfg["seeds"]),
        max_coupons=int(cfg["coupons"]),
        recruit_count_pmf=pmf,
        target_n=int(cfg["n"]),
        regime=cfg.get("regime") or "without_replacement",
        reseed_on_death=not cfg.get("no_reseed"),
    )


def _forest_z(cfg: dict):
    """(forest, z, column) for commands operating on a forest file."""
    _require(cfg, "forest", "attrs", "attribute")
    forest = read_forest_csv(cfg["forest"])
    columns, rows = read_attribute_rows(cfg["attrs"])
    column = cfg["attribute"]
    if column not in columns:
        raise DataError(f"attribute column {column!r} not in {cfg['attrs']} (has {columns})")
    j = columns.index(column)
    missing = [nid for nid in forest.node_id if nid not in rows]
    if missing:
        raise DataError(f"forest ids missing from attribute file: {sorted(set(missing))[:20]}")
    z = np.array([rows[nid][j] for nid in forest.node_id], dtype=np.float64)
    return forest, z, column


def _ipw_totals(cfg: dict) -> PopulationTotals | None:
    if cfg.get("estimator") != "ipw":
        return None
    if cfg.get("population_size") is not None and cfg.get("total_degree") is not None:
        return PopulationTotals(int(cfg["population_size"]), int(cfg["total_degree"]))
    if cfg.get("edges"):
        g = _load_graph(cfg)
        return PopulationTotals(g.n_nodes, g.total_degree)
    raise UsageError("ipw needs --population-size and --total-degree, or --edges")


def cmd_ingest(cfg: dict) -> list[str]:
    _require(cfg, "edges")
    g = _load_graph(cfg)
    payload = {"tool": _tool_block(), "config": _echo(cfg)}
    payload.update(load_summary(g))
    if cfg.get("attrs"):
        table = load_attributes(cfg["attrs"], g)
        payload["attribute_columns"] = table.column_names
    path = _outpath(cfg, "load_summary.json")
    write_json_atomic(path, payload)
    return [path]


def cmd_simulate(cfg: dict) -> list[str]:
    _require(cfg, "edges")
    g = _load_graph(cfg)
    design = _design_from(cfg)
    seed = int(cfg["seed"]) if cfg.get("seed") is not None else 0
    forest = simulate_rds(g, design, generator(seed, 0))
    forest_path = _outpath(cfg, "forest.csv")
    write_forest_csv(forest, forest_path)
    summary = {
        "tool": _tool_block(),
        "config": _echo(cfg),
        "n_entries": forest.n,
        "n_seeds_initial": design.n_seeds,
        "n_reseeds": forest.n_reseeds,
        "n_truncated_recruits": forest.n_truncated,
        "max_wave": int(forest.wave.max()) if forest.n else 0,
        "forest_csv": os.path.basename(forest_path),
    }
    summary_path = _outpath(cfg, "simulate_summary.json")
    write_json_atomic(summary_path, summary)
    return [forest_path, summary_path]


def cmd_bootstrap(cfg: dict) -> list[str]:
    _require(cfg, "method", "B")
    forest, z, column = _forest_z(cfg)
    bc = BootstrapConfig(
        method=cfg["method"],
        n_replicates=int(cfg["B"]),
        selection_pool=cfg.get("pool") or "recruiters_only",
        tree_seed_mode=cfg.get("tree_seed_mode") or "with_replacement",
        estimator=cfg.get("estimator") or "vh",
    )
    totals = _ipw_totals({**cfg, "estimator": bc.estimator})
    seed = int(cfg["seed"]) if cfg.get("seed") is not None else 0
    dist = bootstrap_distribution(forest, bc, z, totals=totals, root=seed)
    level = float(cfg["level"]) if cfg.get("level") is not None else 0.95
    lo, hi = percentile_ci(dist, level)
    variance = bootstrap_variance(dist)
    notes = []
    if bc.method == "neighbourhood":
        notes.append(
            "neighbourhood bootstrap samples never contain seed participants "
            "(seeds are nobody's recruit); this is a vanishing edge effect in the sample size"
        )
    payload = {
        "tool": _tool_block(),
        "config": _echo(cfg),
        "method": bc.method,
        "n_replicates": bc.n_replicates,
        "estimator": bc.estimator,
        "attribute": column,
        "point_estimate": dist.estimator_on_original,
        "variance": variance,
        "se": variance**0.5,
        "ci": {"level": level, "lo": lo, "hi": hi},
        "quantile_rule": "nearest-rank: rank = ceil(q*B) clamped to [1, B]",
        "notes": notes,
    }
    path = _outpath(cfg, "bootstrap.json")
    write_json_atomic(path, payload)
    written = [path]
    if cfg.get("dump_estimates"):
        est_path = _outpath(cfg, "bootstrap_estimates.csv")
        lines = ["replicate,estimate"] + [f"{b},{float(e)!r}" for b, e in enumerate(dist.estimates)]
        write_text_atomic(est_path, "\n".join(lines) + "\n")
        written.append(est_path)
    return written


def cmd_experiment(cfg: dict) -> list[str]:
    _require(cfg, "edges", "attrs")
    if cfg.get("seed") is None:
        raise UsageError("--seed is required for experiment (reproducibility)")
    g = _load_graph(cfg)
    attrs = load_attributes(cfg["attrs"], g)
    design = _design_from(cfg)
    _require(cfg, "R", "B")
    columns = _parse_columns(cfg["columns"]) if cfg.get("columns") else tuple(attrs.column_names)
    methods = _parse_columns(cfg["methods"]) if cfg.get("methods") else ("neighbourhood", "tree")
    levels = _parse_levels(cfg["levels"]) if cfg.get("levels") else (0.95, 0.80)
    workers = cfg.get("workers")
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV}={raw!r} is not an integer")
    if int(workers) < 1:
        raise UsageError("--workers must be at least 1")
    ec = ExperimentConfig(
        design=design,
        attributes=columns,
        n_replications=int(cfg["R"]),
        n_bootstrap=int(cfg["B"]),
        master_seed=int(cfg["seed"]),
        methods=methods,
        ci_levels=levels,
        n_width_reference=int(cfg["width_ref"]) if cfg.get("width_ref") is not None else 5000,
    )
    report = run_full(ec, g, attrs, workers=int(workers))
    csv_path = _outpath(cfg, "experiment_report.csv")
    write_text_atomic(csv_path, report.to_csv_text())
    payload = report.to_json_dict()
    payload["config"]["cli"] = _echo(cfg)
    json_path = _outpath(cfg, "experiment_report.json")
    write_json_atomic(json_path, payload)
    return [csv_path, json_path]


def cmd_oracle(cfg: dict) -> list[str]:
    _require(cfg, "method")
    forest, z, column = _forest_z(cfg)
    estimator = cfg.get("estimator") or "sample_mean"
    totals = _ipw_totals({**cfg, "estimator": estimator})
    if cfg["method"] == "neighbourhood":
        dist = enumerate_neighbourhood(
            forest, z, pool=cfg.get("pool") or "recruiters_only", estimator=estimator, totals=totals
        )
    else:
        dist = enumerate_tree(
            forest,
            z,
            seed_mode=cfg.get("tree_seed_mode") or "with_replacement",
            estimator=estimator,
            totals=totals,
        )
    payload = {
        "tool": _tool_block(),
        "config": _echo(cfg),
        "method": cfg["method"],
        "estimator": estimator,
        "attribute": column,
        "distribution": dist.to_json_dict(),
    }
    if cfg.get("check_identity"):
        payload["moment_identity"] = check_moment_identity(forest, z)
    path = _outpath(cfg, "oracle.json")
    write_json_atomic(path, payload)
    return [path]


_COMMANDS = {
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "bootstrap": cmd_bootstrap,
    "experiment": cmd_experiment,
    "oracle": cmd_oracle,
}


def run(cfg: dict) -> list[str]:
    command = cfg.get("command")
    if command not in _COMMANDS:
        raise UsageError(f"missing or unknown command {command!r}; expected one of {sorted(_COMMANDS)}")
    return _COMMANDS[command](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _merge_config(parser, args)
        written = run(cfg)
    except (RdsVarError, OSError) as e:
        exit_code = e.exit_code if isinstance(e, RdsVarError) else DataError.exit_code
        error = {
            "error": {
                "type": type(e).__name__,
                "message": str(e),
                "exit_code": exit_code,
            }
        }
        print(json.dumps(error), file=sys.stderr)
        return exit_code
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
