"""Command-line harness: run cases, sweep parameters, verify sensitivities.

Commands
--------
meshmorph run <config.toml>               one case (spring strategy
                                          "compare" emits four rows)
meshmorph sweep <config.toml>             long-form CSV over a parameter grid
meshmorph verify-sensitivity <config.toml>  FD verification report
meshmorph quality <vtk_in> <vtk_ref>      metrics of an externally
                                          deformed mesh

All numeric output is deterministic for a fixed config; wall_time_s is
informational only.  Exit status is nonzero only for configuration
errors; solver failures become rows with a non-ok status.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, MeshMorphError
from .layers import identify_layers
from .quality import quality_report
from .spring import deform_spring
from .elastic import deform_linear_elastic
from .yeoh import deform_hyperelastic
from .sensitivity import compute_blocks, verify_fd, write_verification_csv
from .vtk_io import read_vtk, write_metrics_csv, write_vtk

_COMPARE_STRATEGIES = ("diag13", "diag24", "both", "selective")


@dataclass
class CaseResult:
    """One solved (or failed) configuration."""

    problem: str
    model: str
    params: dict = field(default_factory=dict)
    status: str = "ok"
    min_skewness: float = float("nan")
    min_area_ratio: float = float("nan")
    max_area_ratio: float = float("nan")
    inverted_count: int = -1
    wall_time_s: float = 0.0
    deformed: object = None
    report: object = None


def _deform(model, mesh, motion, cfg):
    if model == "spring":
        return deform_spring(mesh, motion, cfgmod.spring_config(cfg))
    if model == "linear_elastic":
        return deform_linear_elastic(mesh, motion, cfgmod.elastic_config(cfg))
    deformed, _ = deform_hyperelastic(mesh, motion, cfgmod.yeoh_config(cfg))
    return deformed


def _model_params(model, cfg):
    if model == "spring":
        c = cfgmod.spring_config(cfg)
        return {
            "strategy": c.strategy,
            "n_steps": c.n_steps,
            "layer_factors": "|".join(f"{f:g}" for f in c.layer_factors),
        }
    if model == "linear_elastic":
        c = cfgmod.elastic_config(cfg)
        return {
            "poisson": f"{c.poisson_ratio:g}",
            "iterations": c.n_iterations,
            "layer_factors": "|".join(f"{f:g}" for f in c.layer_factors),
        }
    c = cfgmod.yeoh_config(cfg)
    return {
        "a20": f"{c.a20:g}",
        "kappa": f"{c.kappa:g}",
        "layer_factors": "|".join(f"{f:g}" for f in c.layer_factors),
    }


def run_case(cfg, extra_params=None):
    """Solve one configuration; returns a list of result rows."""
    model = cfgmod.model_name(cfg)
    kind, mesh, motion = cfgmod.build_problem(cfg)
    strategy = cfg.get("spring", {}).get("strategy", "selective")
    if model == "spring" and strategy == "compare":
        rows = []
        for one in _COMPARE_STRATEGIES:
            sub = cfgmod.apply_overrides(cfg, {"strategy": one})
            rows.extend(run_case(sub, extra_params))
        return rows

    params = dict(extra_params or {})
    params.update(_model_params(model, cfg))
    result = CaseResult(problem=kind, model=model, params=params)
    start = time.perf_counter()
    try:
        deformed = _deform(model, mesh, motion, cfg)
    except MeshMorphError as exc:
        result.status = type(exc).__name__
        result.wall_time_s = time.perf_counter() - start
        return [result]
    result.wall_time_s = time.perf_counter() - start
    report = quality_report(deformed, mesh)
    result.min_skewness = report.min_skewness
    result.min_area_ratio = report.min_area_ratio
    result.max_area_ratio = report.max_area_ratio
    result.inverted_count = report.n_inverted
    result.deformed = deformed
    result.report = report
    return [result]


_METRIC_COLUMNS = (
    "min_skewness", "min_area_ratio", "max_area_ratio", "inverted_count",
    "status", "wall_time_s",
)


def _result_rows(results):
    param_names = []
    for r in results:
        for name in r.params:
            if name not in param_names:
                param_names.append(name)
    header = ["problem", "model", *param_names, *_METRIC_COLUMNS]
    rows = [header]
    for r in results:
        row = [r.problem, r.model]
        row.extend(str(r.params.get(name, "")) for name in param_names)
        row.extend([
            f"{r.min_skewness:.12g}",
            f"{r.min_area_ratio:.12g}",
            f"{r.max_area_ratio:.12g}",
            str(r.inverted_count),
            r.status,
            f"{r.wall_time_s:.3f}",
        ])
        rows.append(row)
    return rows


def _write_case_csv(path, results):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(_result_rows(results))


def _layer_index(cfg, model, mesh):
    # layer count only; avoids full model-config validation so the
    # compare pseudo-strategy can reuse this path
    section = {"linear_elastic": "linear_elastic", "yeoh": "yeoh"}.get(model, "spring")
    factors = tuple(
        cfg.get(section, {}).get(
            "layer_factors", cfg.get("stiffening", {}).get("layer_factors", ())
        )
    )
    n_layers = len(factors) if factors else 1
    return identify_layers(mesh, mesh.interface, n_layers).layer_of_element


def _write_artifacts(out_dir, stem, cfg, results, fmt):
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        _write_case_csv(out_dir / f"{stem}_case.csv", results)
    if not any(r.deformed is not None for r in results):
        return
    _, mesh, _ = cfgmod.build_problem(cfg)
    for r in results:
        if r.deformed is None:
            continue
        tag = f"{stem}_{r.model}"
        if r.model == "spring":
            tag += f"_{r.params.get('strategy', '')}"
        layer_idx = _layer_index(cfg, r.model, mesh)
        if fmt in ("vtk", "both"):
            write_vtk(out_dir / f"{tag}_deformed.vtk", r.deformed, {
                "skewness": r.report.per_element_skewness,
                "area_ratio": r.report.per_element_area_ratio,
                "layer_index": layer_idx.astype(float),
            })
        if fmt in ("csv", "both"):
            write_metrics_csv(
                out_dir / f"{tag}_metrics.csv",
                r.report.element_ids,
                r.report.per_element_skewness,
                r.report.per_element_area_ratio,
                layer_idx,
            )


def _cmd_run(args):
    cfg = cfgmod.load_config(args.config)
    results = run_case(cfg)
    _write_artifacts(Path(args.out), cfg["_stem"], cfg, results, args.format)
    for line in _result_rows(results)[1:]:
        print(",".join(line))
    return 0


def _sweep_worker(payload):
    cfg, point = payload
    sub = cfgmod.apply_overrides(cfg, point)
    sub.setdefault("spring", {})
    if sub["spring"].get("strategy") == "compare":
        raise ConfigError("sweep does not support the compare pseudo-strategy")
    results = run_case(sub, extra_params=point)
    for r in results:  # keep worker results cheap to pickle
        r.deformed = None
        r.report = None
    return results


def run_sweep(cfg, jobs=1):
    """Evaluate the sweep grid; returns result rows in grid order."""
    names, points = cfgmod.sweep_grid(cfg)
    payloads = [(cfg, {n: p[n] for n in names}) for p in points]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            nested = list(pool.map(_sweep_worker, payloads, chunksize=1))
    else:
        nested = [_sweep_worker(p) for p in payloads]
    results = [r for group in nested for r in group]
    best = None
    for r in results:
        if r.status != "ok":
            continue
        if best is None or r.min_skewness > best.min_skewness:
            best = r
    if best is not None:
        summary = CaseResult(
            problem=best.problem, model=best.model, params=dict(best.params),
            status="argmax", min_skewness=best.min_skewness,
            min_area_ratio=best.min_area_ratio, max_area_ratio=best.max_area_ratio,
            inverted_count=best.inverted_count, wall_time_s=0.0,
        )
        results.append(summary)
    return results


def _cmd_sweep(args):
    cfg = cfgmod.load_config(args.config)
    results = run_sweep(cfg, jobs=args.jobs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{cfg['_stem']}_sweep.csv"
    _write_case_csv(path, results)
    print(f"{len(results)} rows -> {path}")
    return 0


def _cmd_verify_sensitivity(args):
    cfg = cfgmod.load_config(args.config)
    cfg["model"] = "yeoh"
    _, mesh, motion = cfgmod.build_problem(cfg)
    _, state = deform_hyperelastic(mesh, motion, cfgmod.yeoh_config(cfg))
    report = verify_fd(state, compute_blocks(state))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_verification_csv(report, out_dir / f"{cfg['_stem']}_sensitivity.csv")
    for check in report.checks:
        verdict = "PASS" if check.passed else "FAIL"
        print(
            f"{check.block}: {verdict} relative_error={check.relative_error:.3e} "
            f"(threshold {check.threshold:.0e}, h={check.best_h:.0e})"
        )
    return 0


def _cmd_quality(args):
    mesh_in, _ = read_vtk(args.vtk_in)
    mesh_ref, ref_data = read_vtk(args.vtk_ref)
    report = quality_report(mesh_in, mesh_ref)
    layer_idx = ref_data.get("layer_index", np.zeros(mesh_ref.n_quads))
    print(f"elements: {mesh_ref.n_quads}")
    print(f"min_skewness: {report.min_skewness:.12g}")
    print(f"min_area_ratio: {report.min_area_ratio:.12g}")
    print(f"max_area_ratio: {report.max_area_ratio:.12g}")
    print(f"inverted_count: {report.n_inverted}")
    if args.out != ".":
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(
            out_dir / (Path(args.vtk_in).stem + "_metrics.csv"),
            report.element_ids,
            report.per_element_skewness,
            report.per_element_area_ratio,
            layer_idx.astype(int),
        )
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    common.add_argument("--seed", type=int, default=0,
                        help="reserved; solvers are deterministic")
    common.add_argument("--format", choices=("csv", "vtk", "both"), default="both")
    parser = argparse.ArgumentParser(
        prog="meshmorph",
        description="Structured quad mesh deformation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="run one configured case")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)
    p_sweep = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    p_sweep.add_argument("config")
    p_sweep.set_defaults(func=_cmd_sweep)
    p_ver = sub.add_parser("verify-sensitivity", parents=[common],
                           help="FD-check sensitivity blocks")
    p_ver.add_argument("config")
    p_ver.set_defaults(func=_cmd_verify_sensitivity)
    p_q = sub.add_parser("quality", parents=[common],
                         help="rate a deformed mesh against its reference")
    p_q.add_argument("vtk_in")
    p_q.add_argument("vtk_ref")
    p_q.set_defaults(func=_cmd_quality)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MeshMorphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
