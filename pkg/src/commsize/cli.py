"""Command-line front end.

    commsize simulate --model null --p-e 0.1 --p-j 0.1 --seed 7
    commsize sweep --config grid.yaml --jobs 4
    commsize reproduce fig3 --baseline reddit_sizes.csv --plot
    commsize ingest --events comments.csv
    commsize ecdf --sizes out/sizes.csv
    commsize compare --sim out/sizes.csv --baseline reddit_sizes.csv --plot
    commsize utility-grid --sc-max 100 --sf-max 1000

Outputs land in ``--out`` (default ``$COMMSIZE_OUTPUT_DIR`` or
``./commsize-out``) together with a ``manifest.json`` recording the
effective config, seeds and files written.

Exit codes: 0 success, 1 failed sweep cells, 2 usage error, 3 input
parse error, 4 input validation error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, baseline, config, metrics, presets
from .decision import write_utility_grid
from .engine import (
    COMBINED, FAMILIES, IEB, NULL, SOCIAL, ModelConfig, RunResult, SweepGrid,
    run, sweep, write_sizes_csv, write_steps_csv, write_sweep_csv,
)

log = logging.getLogger("commsize")

EXIT_CELLS_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4

# flag dest -> ModelConfig field
MODEL_FLAGS = {
    "model": "family", "agents": "n_agents", "communities": "n_communities",
    "steps": "steps", "seed": "seed", "p_e": "p_e", "p_j": "p_j", "p_l": "p_l",
    "m": "m", "share": "share", "p_k": "p_k", "startup_cost": "startup_cost",
    "horizon": "horizon", "projection": "projection", "update": "update",
}
# parameters that have no sensible default for a family and must be given
REQUIRED = {
    NULL: ("p_e", "p_j"),
    SOCIAL: ("m",),
    IEB: ("p_e", "p_k"),
    COMBINED: ("m", "p_k"),
}


class UsageError(Exception):
    pass


def _flag(field: str) -> str:
    inverse = {v: k for k, v in MODEL_FLAGS.items()}
    return "--" + inverse.get(field, field).replace("_", "-")


def _add_model_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="YAML/JSON config file; flags override it")
    g.add_argument("--model", choices=FAMILIES)
    g.add_argument("--agents", type=int)
    g.add_argument("--communities", type=int)
    g.add_argument("--steps", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--p-e", type=float, help="exposure probability (fallback for social models)")
    g.add_argument("--p-j", type=float, help="join probability (random decisions)")
    g.add_argument("--p-l", type=float, help="leave probability (random decisions)")
    g.add_argument("--m", type=int, help="communities shared per neighbor")
    g.add_argument("--share", choices=["random", "largest"])
    g.add_argument("--p-k", type=float, help="share of candidate communities kept (IEB)")
    g.add_argument("--startup-cost", type=float)
    g.add_argument("--horizon", type=int)
    g.add_argument("--projection", choices=["linear", "quadratic"])
    g.add_argument("--update", choices=["synchronous", "sequential"])


def _add_output_flags(p: argparse.ArgumentParser, plot: bool = True):
    p.add_argument("--out", default=os.environ.get("COMMSIZE_OUTPUT_DIR", "commsize-out"),
                   help="output directory (default $COMMSIZE_OUTPUT_DIR or ./commsize-out)")
    if plot:
        p.add_argument("--plot", action="store_true", help="also render a figure")
        p.add_argument("--format", default="svg", choices=["svg", "pdf", "png"])


def _flag_values(args) -> dict:
    return {MODEL_FLAGS[k]: getattr(args, k) for k in MODEL_FLAGS if getattr(args, k) is not None}


def _model_from_args(args, base: dict | None = None) -> ModelConfig:
    values = dict(base or {})
    if args.config:
        values.update(config.normalize(config.load_mapping(args.config)))
    values.update(_flag_values(args))
    family = values.get("family")
    if family is None:
        raise UsageError("--model is required (or 'family' in the config file)")
    missing = [f for f in REQUIRED[family] if f not in values]
    if missing:
        raise UsageError(
            f"model {family} needs {', '.join(_flag(f) for f in missing)}"
        )
    try:
        return ModelConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, payload: dict):
    manifest = {"command": command, "version": __version__, "argv": sys.argv[1:], **payload}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)


def _read_size_column(path) -> np.ndarray:
    """Sizes from any CSV with a ``size`` or ``final_size`` column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        col = "size" if "size" in fields else "final_size" if "final_size" in fields else None
        if col is None:
            raise baseline.BaselineParseError(f"{path}: no size or final_size column", 1)
        sizes = []
        for row in reader:
            try:
                sizes.append(int(row[col]))
            except (TypeError, ValueError):
                raise baseline.BaselineParseError(
                    f"{path}: size {row[col]!r} is not an integer", reader.line_num
                ) from None
    return np.asarray(sizes, dtype=np.int64)


def _read_baseline(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    if "community" in header and "size" in header:
        return np.fromiter(baseline.load_sizes(path).values(), dtype=np.int64)
    return _read_size_column(path)


def _summary_text(sizes) -> str:
    row = metrics.summary_row(0, sizes)
    return (f"gini={row['gini']:.4f} max={row['max']} median={row['median']:g} "
            f"cv={row['cv']:.4f} loglog_r2={row['loglog_r2']:.4f}")


# --- commands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _model_from_args(args)
    out = _out_dir(args)
    result = run(cfg, record_steps=args.record_steps)
    files = {"sizes": str(out / "sizes.csv")}
    write_sizes_csv(out / "sizes.csv", result)
    if args.record_steps:
        files["steps"] = str(out / "steps.csv")
        write_steps_csv(out / "steps.csv", [result])
    if args.plot:
        from .plotting import plot_ecdf_grid
        files["figure"] = str(out / f"ecdf.{args.format}")
        curve = metrics.complementary_ecdf(result.final_sizes)
        plot_ecdf_grid([({}, curve)], files["figure"], title=cfg.family)
    _write_manifest(out, "simulate", {
        "config": cfg.to_dict(), "seeds": [cfg.seed], "files": files,
        "wall_time": result.wall_time,
    })
    print(_summary_text(result.final_sizes))
    return 0


def _emit_sweep(out: Path, grid: SweepGrid, results: list[RunResult], args,
                baseline_sizes: np.ndarray | None = None, figure: str | None = None) -> dict:
    axes = list(grid.axes)
    files = {"sweep": str(out / "sweep.csv"), "summary": str(out / "summary.csv"),
             "ecdf": str(out / "ecdf.csv")}
    write_sweep_csv(out / "sweep.csv", results, axes)
    ok = [r for r in results if r.ok]
    metrics.write_summary_csv(out / "summary.csv",
                              [metrics.summary_row(r.cell_id, r.final_sizes) for r in ok])
    base_curve = None
    if baseline_sizes is not None:
        base_curve = metrics.complementary_ecdf(baseline_sizes)
    with open(out / "ecdf.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "replicate", *axes, "series", "size", "frac_at_least"])
        for r in ok:
            head = [r.cell_id, r.replicate, *(r.params[a] for a in axes)]
            curve = metrics.complementary_ecdf(r.final_sizes)
            rows = (metrics.overlay(curve, base_curve) if base_curve is not None
                    else [("sim", s, f) for s, f in curve.points])
            for series, s, f in rows:
                w.writerow([*head, series, s, repr(f)])
    if getattr(args, "record_steps", False):
        files["steps"] = str(out / "steps.csv")
        write_steps_csv(out / "steps.csv", ok)
    if args.plot and ok:
        from .plotting import plot_ecdf_grid
        first = [r for r in ok if r.replicate == 0]
        rows_axis = axes[0] if len(axes) >= 2 else None
        cols_axis = axes[1] if len(axes) >= 2 else (axes[0] if axes else None)
        files["figure"] = str(out / f"{figure or 'sweep'}.{args.format}")
        plot_ecdf_grid([(r.params, metrics.complementary_ecdf(r.final_sizes)) for r in first],
                       files["figure"], baseline=base_curve, rows=rows_axis, cols=cols_axis,
                       title=figure)
    return files


def _sweep_payload(grid, results, files, started) -> dict:
    return {
        "config": grid.base.to_dict(),
        "axes": grid.axes,
        "replicates": grid.replicates,
        "seeds": [{"cell_id": r.cell_id, "replicate": r.replicate, "seed": r.seed,
                   "params": r.params} for r in results],
        "failures": [{"cell_id": r.cell_id, "replicate": r.replicate, "params": r.params,
                      "error": r.error} for r in results if not r.ok],
        "files": files,
        "wall_time": time.perf_counter() - started,
    }


def _report_failures(results) -> int:
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"cell {r.cell_id} replicate {r.replicate} {r.params} failed: {r.error}",
              file=sys.stderr)
    return EXIT_CELLS_FAILED if failed else 0


def _parse_axis(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise UsageError(f"--axis expects NAME=v1,v2,..., got {spec!r}")
    name, values = spec.split("=", 1)
    import yaml
    return name, [yaml.safe_load(v) for v in values.split(",")]


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    mapping = config.load_mapping(args.config) if args.config else {}
    if args.axis:
        mapping.setdefault("axes", {})
        mapping["axes"].update(dict(_parse_axis(a) for a in args.axis))
    if args.replicates is not None:
        mapping["replicates"] = args.replicates
    if not mapping.get("axes"):
        raise UsageError("sweep needs axes, from --config or --axis NAME=v1,v2")
    args.config = None  # already consumed; flags below only override the base
    try:
        grid = config.sweep_grid(mapping, _flag_values(args))
    except config.ConfigError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    results = sweep(grid, parallelism=args.jobs, record_steps=args.record_steps)
    files = _emit_sweep(out, grid, results, args)
    _write_manifest(out, "sweep", _sweep_payload(grid, results, files, started))
    print(f"{len([r for r in results if r.ok])}/{len(results)} runs completed -> {out}")
    return _report_failures(results)


def cmd_reproduce(args) -> int:
    started = time.perf_counter()
    overrides = {k: v for k, v in (("n_agents", args.agents), ("steps", args.steps)) if v is not None}
    try:
        grid = presets.figure_grid(args.figure, seed=args.seed, replicates=args.replicates,
                                   **overrides)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    base_sizes = _read_baseline(args.baseline) if args.baseline else None
    out = _out_dir(args)
    results = sweep(grid, parallelism=args.jobs, record_steps=args.record_steps)
    files = _emit_sweep(out, grid, results, args, baseline_sizes=base_sizes, figure=args.figure)
    payload = _sweep_payload(grid, results, files, started)
    payload["figure"] = args.figure
    payload["baseline"] = args.baseline
    _write_manifest(out, "reproduce", payload)
    cells = len(grid.cells())
    print(f"{args.figure}: {cells} cells x {grid.replicates} replicates in "
          f"{payload['wall_time']:.1f}s -> {out}")
    return _report_failures(results)


def cmd_ingest(args) -> int:
    cfg = baseline.BaselineConfig(min_comments=args.min_comments, size_cap=args.size_cap,
                                  exclude_above_cap=not args.keep_above_cap)
    if bool(args.events) == bool(args.sizes):
        raise UsageError("give exactly one of --events or --sizes")
    if args.events:
        sizes = baseline.aggregate_members(baseline.read_events(args.events), cfg)
    else:
        sizes = baseline.load_sizes(args.sizes, cfg)
    out = _out_dir(args)
    path = out / "baseline_sizes.csv"
    baseline.write_sizes(path, sizes)
    _write_manifest(out, "ingest", {"baseline_config": dataclasses.asdict(cfg),
                                    "files": {"sizes": str(path)}, "communities": len(sizes)})
    print(f"{len(sizes)} communities -> {path}")
    return 0


def cmd_ecdf(args) -> int:
    sizes = _read_size_column(args.sizes)
    curve = metrics.complementary_ecdf(sizes, drop_zeros=not args.keep_zeros)
    out = _out_dir(args)
    path = out / "ecdf.csv"
    metrics.write_ecdf_csv(path, {args.series: curve})
    files = {"ecdf": str(path)}
    if args.plot:
        from .plotting import plot_ecdf_grid
        files["figure"] = str(out / f"ecdf.{args.format}")
        plot_ecdf_grid([({}, curve)], files["figure"])
    _write_manifest(out, "ecdf", {"input": args.sizes, "files": files})
    print(f"{len(curve)} points -> {path}")
    return 0


def cmd_compare(args) -> int:
    sim = _read_size_column(args.sim)
    base = _read_baseline(args.baseline)
    sim_curve = metrics.complementary_ecdf(sim)
    base_curve = metrics.complementary_ecdf(base)
    out = _out_dir(args)
    with open(out / "overlay.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series", "size", "frac_at_least"])
        for series, s, f in metrics.overlay(sim_curve, base_curve):
            w.writerow([series, s, repr(f)])
    metrics.write_summary_csv(out / "summary.csv",
                              [metrics.summary_row("sim", sim), metrics.summary_row("baseline", base)])
    files = {"overlay": str(out / "overlay.csv"), "summary": str(out / "summary.csv")}
    if args.plot:
        from .plotting import plot_overlay
        files["figure"] = str(out / f"overlay.{args.format}")
        plot_overlay(sim_curve, base_curve, files["figure"])
    _write_manifest(out, "compare", {"sim": args.sim, "baseline": args.baseline, "files": files})
    print("sim:      " + _summary_text(sim))
    print("baseline: " + _summary_text(base))
    return 0


def cmd_utility_grid(args) -> int:
    s_c = np.linspace(0, args.sc_max, args.points)
    s_f = np.linspace(0, args.sf_max, args.points)
    out = _out_dir(args)
    path = out / "utility_grid.csv"
    grid = write_utility_grid(path, s_c.tolist(), s_f.tolist(), args.startup_cost)
    files = {"utility_grid": str(path)}
    if args.plot:
        from .plotting import plot_utility_surface
        files["figure"] = str(out / f"utility_grid.{args.format}")
        plot_utility_surface(grid, s_c, s_f, files["figure"])
    _write_manifest(out, "utility-grid", {"startup_cost": args.startup_cost, "files": files})
    print(f"{grid.size} cells -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="commsize", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation")
    _add_model_flags(p)
    _add_output_flags(p)
    p.add_argument("--record-steps", action="store_true", help="also write per-step sizes")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid")
    _add_model_flags(p)
    _add_output_flags(p)
    p.add_argument("--axis", action="append", metavar="NAME=v1,v2",
                   help="sweep axis; repeatable, adds to the config file's axes")
    p.add_argument("--replicates", type=int)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--record-steps", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="run a named figure grid")
    p.add_argument("figure", help=f"one of {', '.join(presets.FIGURE_IDS)}")
    p.add_argument("--baseline", help="empirical sizes CSV to overlay")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--agents", type=int, help="override the agent count (smoke runs)")
    p.add_argument("--steps", type=int, help="override the step count (smoke runs)")
    p.add_argument("--record-steps", action="store_true")
    _add_output_flags(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("ingest", help="build a baseline size table")
    p.add_argument("--events", help="community,user[,count] CSV")
    p.add_argument("--sizes", help="community,size CSV")
    p.add_argument("--min-comments", type=int, default=5)
    p.add_argument("--size-cap", type=int, default=9000)
    p.add_argument("--keep-above-cap", action="store_true")
    _add_output_flags(p, plot=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("ecdf", help="complementary eCDF of a size table")
    p.add_argument("--sizes", required=True)
    p.add_argument("--series", default="sim")
    p.add_argument("--keep-zeros", action="store_true")
    _add_output_flags(p)
    p.set_defaults(func=cmd_ecdf)

    p = sub.add_parser("compare", help="overlay a simulated and a baseline eCDF")
    p.add_argument("--sim", required=True)
    p.add_argument("--baseline", required=True)
    _add_output_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("utility-grid", help="tabulate total expected benefit")
    p.add_argument("--sc-max", type=float, default=100)
    p.add_argument("--sf-max", type=float, default=1000)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--startup-cost", type=float, default=0.5)
    _add_output_flags(p)
    p.set_defaults(func=cmd_utility_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, config.ConfigError) as exc:
        parser.error(str(exc))
    except baseline.BaselineParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (baseline.BaselineValidationError, metrics.DegenerateDistributionError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
