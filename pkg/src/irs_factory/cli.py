"""Command line entry point: ``irs-factory {deploy,simulate,sweep,compare}``.

Data goes to files (or stdout for ``deploy``); progress and logs go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import engine
from .config import ConfigError, RunManifest, config_to_dict, load_config
from .engine import ScenarioConfig
from .geometry import element_grid, irs_positions, subgrid, ue_grid, wall_counts

log = logging.getLogger("irs_factory")

SWEEP_AXES = ("M", "h", "lambdaB", "PT")

RESULT_COLUMNS = ["ue_x", "ue_y", "exp_snr_db", "exp_snr_se", "exp_fbcap_bps_hz", "exp_fbcap_se",
                  "exp_outage", "exp_outage_se", "n_samples", "outage_censored"]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header, rows, manifest_hash: str):
    buf = io.StringIO()
    buf.write(f"# manifest_sha256={manifest_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def build_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.mode:
        cfg = replace(cfg, mode=args.mode)
    if args.grid_res:
        cfg = replace(cfg, ue_grid_resolution=args.grid_res)
    if getattr(args, "full_scale", False):
        cfg = cfg.with_samples(engine.FULL_SCALE_SAMPLES)
    elif args.samples:
        cfg = cfg.with_samples(args.samples)
    return cfg


def _points(cfg: ScenarioConfig, args):
    pts = ue_grid(cfg.layout, cfg.ue_grid_resolution)
    if args.subgrid:
        nx, ny = (int(v) for v in args.subgrid.lower().split("x"))
        pts = subgrid(pts, nx, ny)
    return pts


def _result_rows(report):
    for p in report.points:
        yield [p.ue[0], p.ue[1], p.snr_db, p.snr_se_db, p.fbcap_mean, p.fbcap_se,
               p.outage, p.outage_se, p.n_samples, p.outage_censored]


def _emit_report(report, out: Path, manifest: RunManifest, prefix: str = ""):
    digest = manifest.digest
    results = out / f"{prefix}results.csv"
    _write_csv(results, RESULT_COLUMNS, _result_rows(report), digest)
    aggregates = out / f"{prefix}aggregates.json"
    _write_json(aggregates, {"manifest_sha256": digest, "n_points": len(report.points),
                             "metrics": report.aggregates()})
    cdf = out / f"{prefix}cdf.csv"
    rows = []
    for metric in engine.METRICS:
        vals, frac = report.cdf(metric)
        rows.extend([metric, v, f] for v, f in zip(vals, frac))
    _write_csv(cdf, ["metric", "value", "cumulative_fraction"], rows, digest)
    return [results, aggregates, cdf]


def _finish(manifest: RunManifest, out: Path, outputs):
    path = out / "manifest.json"
    path.write_text(manifest.finish(outputs).to_json() + "\n", encoding="utf-8")


# --------------------------------------------------------------------------

def cmd_deploy(args) -> int:
    cfg = build_config(args)
    layout = cfg.layout
    N = args.N or cfg.total_elements_N
    h = args.height if args.height is not None else cfg.irs_height_h
    m_values = args.M or [1, 4, 8, 12, 16]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["M", "n_L1", "n_L2", "n_W", "N_h", "N_v", "grid_source", "positions"])
    for M in m_values:
        n_w, n_l1, n_l2 = wall_counts(M, layout.aspect_tau)
        grid = element_grid(M, N)
        pos, _ = irs_positions(layout, M, h)
        pos_txt = ";".join("(" + ",".join(f"{c:g}" for c in p) + ")" for p in pos)
        writer.writerow([M, n_l1, n_l2, n_w, grid.nh, grid.nv,
                         "table" if grid.from_table else "non-Table-I", pos_txt])
    return 0


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pts = _points(cfg, args)
    manifest = RunManifest("simulate", config_to_dict(cfg), cfg.master_seed,
                           extra={"subgrid": args.subgrid})
    log.info("simulating %d UE points, %d realisations each", len(pts), cfg.n_samples)
    report = engine.run_grid(cfg, pts, workers=args.workers)
    outputs = _emit_report(report, out, manifest)
    _finish(manifest, out, outputs)
    return 0


def _parse_axis(text: str):
    name, _, vals = text.partition("=")
    if name not in SWEEP_AXES or not vals:
        raise ConfigError(f"sweep axis must look like NAME=v1,v2 with NAME in {SWEEP_AXES}")
    conv = int if name == "M" else float
    return name, [conv(v) for v in vals.split(",")]


def _apply_axis(cfg: ScenarioConfig, name: str, value) -> ScenarioConfig:
    if name == "M":
        return replace(cfg, num_irs_M=value)
    if name == "h":
        return replace(cfg, irs_height_h=value)
    if name == "lambdaB":
        return replace(cfg, blockage=replace(cfg.blockage, density_lambdaB=value))
    return replace(cfg, radio=replace(cfg.radio, tx_power_dbm=value))


def cmd_sweep(args) -> int:
    base = build_config(args)
    axes = [_parse_axis(a) for a in args.axis]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pts = _points(base, args)
    manifest = RunManifest("sweep", config_to_dict(base), base.master_seed,
                           extra={"axes": args.axis, "subgrid": args.subgrid})
    names = [n for n, _ in axes]
    rows = []
    for combo in itertools.product(*[vals for _, vals in axes]):
        cfg = base
        for name, value in zip(names, combo):
            cfg = _apply_axis(cfg, name, value)
        log.info("sweep cell %s", dict(zip(names, combo)))
        report = engine.run_grid(cfg, pts, workers=args.workers)
        for metric, stats in report.aggregates().items():
            for stat, value in stats.items():
                rows.append([*combo, metric, stat, value])
    path = out / "sweep.csv"
    _write_csv(path, [*names, "metric", "statistic", "value"], rows, manifest.digest)
    _finish(manifest, out, [path])
    return 0


COMPARE_COLUMNS = ["ue_x", "ue_y", "exp_snr_db", "exp_snr_se", "analytic_snr_db",
                   "analytic_snr_assembled_db", "snr_gap_db", "exp_fbcap_bps_hz", "exp_fbcap_se",
                   "analytic_cap_bound", "cap_gap"]


def cmd_compare(args) -> int:
    cfg = build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pts = _points(cfg, args)
    manifest = RunManifest("compare", config_to_dict(cfg), cfg.master_seed,
                           extra={"subgrid": args.subgrid})
    rows = engine.compare_analytic(cfg, pts, workers=args.workers)
    table = [[r.ue[0], r.ue[1], r.mc_snr_db, 10 / np.log(10) * r.mc_snr_se / r.mc_snr,
              r.analytic_snr_db, float(10 * np.log10(r.analytic_snr_assembled)), r.snr_gap_db,
              r.mc_fbcap, r.mc_fbcap_se, r.analytic_cap_bound, r.cap_gap] for r in rows]
    path = out / "compare.csv"
    _write_csv(path, COMPARE_COLUMNS, table, manifest.digest)
    summary = out / "compare_summary.json"
    _write_json(summary, {
        "manifest_sha256": manifest.digest,
        "mean_abs_snr_gap_db": float(np.mean([abs(r.snr_gap_db) for r in rows])),
        "mean_cap_gap": float(np.mean([r.cap_gap for r in rows])),
        "n_points": len(rows),
    })
    _finish(manifest, out, [path, summary])
    return 0


# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="scenario JSON file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--mode", choices=engine.MODES)
    p.add_argument("--grid-res", type=float, help="UE grid resolution in metres")
    p.add_argument("--samples", type=int, help="realisations per UE point")
    p.add_argument("-v", "--verbose", action="store_true")


def _run_opts(p: argparse.ArgumentParser):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--subgrid", help="evenly spread NXxNY subset of the UE grid, e.g. 5x5")
    p.add_argument("--full-scale", action="store_true", help="use 2500 drops x 4000 draws per point")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irs-factory", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deploy", help="print IRS deployment table")
    _common(p)
    p.add_argument("--M", type=int, nargs="+")
    p.add_argument("--N", type=int)
    p.add_argument("--height", type=float)
    p.set_defaults(func=cmd_deploy)

    p = sub.add_parser("simulate", help="per-UE metrics over the grid")
    _common(p)
    _run_opts(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid aggregates over parameter values")
    _common(p)
    _run_opts(p)
    p.add_argument("--axis", action="append", required=True,
                   help=f"NAME=v1,v2,... with NAME in {SWEEP_AXES}; repeat for a cartesian sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="closed form against Monte Carlo")
    _common(p)
    _run_opts(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
