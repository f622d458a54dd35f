"""Command-line front end: one subcommand per study, JSON/CSV outputs.

Every command reads a JSON config (all fields defaulted), applies flag
overrides, writes its tables plus a hashed manifest under the output
directory, and exits 0 on success, 1 on runtime errors, 2 on config
errors, 3 on numerical failures.  Reruns with identical config and seed
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from fractions import Fraction
from functools import partial
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .diagnostics import (clt_study, exponent_calc, lln_study, round_density,
                          _simulate_grid_worker)
from .io import (config_hash, gaussian_rows, meanfield_rows, trajectory_rows,
                 write_json, write_manifest, write_rows)
from .lna import covariance_ode
from .meanfield import NumericalError, integrate_meanfield
from .model import check_assumptions
from .process import run_replicas, simulate_ssa
from .state import SparseCounts

__all__ = ["main"]


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Fraction):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _sim_worker(payload, _rep, seed):
    model, counts, scale, horizon, record, grid = payload
    return simulate_ssa(model, SparseCounts.from_dense(counts), scale=scale,
                        horizon=horizon, seed=seed, record=record, grid=grid)


def _outdir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    sim = config.simulation
    x0N = round_density(sim.N, sim.density())
    grid = np.linspace(0.0, sim.horizon, sim.grid_points)
    payload = (model, x0N.to_dense(), float(sim.N), sim.horizon, sim.record,
               grid if sim.record == "grid" else None)
    trajs = run_replicas(partial(_sim_worker, payload), master_seed=sim.seed,
                         n=sim.replicas, workers=threads)
    out = _outdir(config)
    files = [
        write_rows(out / "trajectories.csv",
                   ("replica", "time", "type_index", "count"),
                   trajectory_rows(trajs)),
        write_json(out / "trajectories.json", {
            "N": sim.N, "horizon": sim.horizon, "replicas": sim.replicas,
            "record": sim.record, "grid_points": sim.grid_points,
            "events": [int(t.events) for t in trajs],
            "absorbed": [bool(t.absorbed) for t in trajs],
            "config_hash": config_hash(config), "seed": sim.seed,
        }),
    ]
    write_manifest(out, files, config, sim.seed)
    print(f"simulate: {sim.replicas} trajectories, N={sim.N}, "
          f"T={sim.horizon} -> {out}")
    return 0


def cmd_meanfield(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    sim, mfc = config.simulation, config.meanfield
    grid = np.linspace(0.0, sim.horizon, sim.grid_points)
    mf = integrate_meanfield(model, sim.density(), sim.horizon, M=mfc.M,
                             tol=mfc.tol, grid=grid)
    deficit = mf.mass_deficit()
    out = _outdir(config)
    files = [
        write_rows(out / "meanfield.csv", ("time", "type_index", "density"),
                   meanfield_rows(mf)),
        write_json(out / "meanfield.json", {
            "M": mf.M, "tol": mfc.tol, "horizon": sim.horizon,
            "dropped_flux_final": float(deficit[-1]),
            "dropped_flux_max": float(np.abs(deficit).max()),
            "config_hash": config_hash(config), "seed": sim.seed,
        }),
    ]
    write_manifest(out, files, config, sim.seed)
    print(f"meanfield: M={mfc.M}, T={sim.horizon}, "
          f"dropped flux {deficit[-1]:.3e} -> {out}")
    return 0


def cmd_lna(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    sim, lnac = config.simulation, config.lna
    grid = np.linspace(0.0, sim.horizon, sim.grid_points)
    mf = integrate_meanfield(model, sim.density(), sim.horizon, M=lnac.M,
                             tol=config.meanfield.tol, grid=grid)
    summary = covariance_ode(model, mf, horizon=sim.horizon, tol=lnac.tol,
                             grid=grid)
    floor = float(np.linalg.eigvalsh(summary.cov[-1]).min())
    out = _outdir(config)
    files = [
        write_rows(out / "gaussian.csv", ("time", "i", "j", "cov_ij"),
                   gaussian_rows(summary)),
        write_json(out / "gaussian.json", {
            "M": lnac.M, "tol": lnac.tol, "horizon": sim.horizon,
            "final_min_eigenvalue": floor,
            "config_hash": config_hash(config), "seed": sim.seed,
        }),
    ]
    write_manifest(out, files, config, sim.seed)
    print(f"lna: M={lnac.M}, T={sim.horizon}, "
          f"min eig at T {floor:.3e} -> {out}")
    return 0


def cmd_lln(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    sim, mfc = config.simulation, config.meanfield
    study = lln_study(model, sim.density(), sim.horizon,
                      [int(n) for n in sim.N_grid], sim.replicas, sim.seed,
                      M=mfc.M, grid_points=sim.grid_points, tol=mfc.tol,
                      workers=threads)
    rows = [("lln", int(N), rep, "sup_error", float(study.errors[i, rep]))
            for i, N in enumerate(study.N_grid)
            for rep in range(study.replicas)]
    out = _outdir(config)
    files = [
        write_rows(out / "study.csv",
                   ("study", "N", "replica", "statistic", "value"), rows),
        write_json(out / "report.json", {
            "study": "lln", "N_grid": [int(n) for n in study.N_grid],
            "replicas": study.replicas, "slope": study.slope,
            "slope_se": study.slope_se,
            "mean_errors": _jsonable(study.mean_errors),
            "config_hash": config_hash(config), "seed": sim.seed,
        }),
    ]
    write_manifest(out, files, config, sim.seed)
    print(f"lln: slope {study.slope:.3f} +- {study.slope_se:.3f} -> {out}")
    return 0


def cmd_clt(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    sim, lnac = config.simulation, config.lna
    rep = clt_study(model, sim.density(), sim.horizon, sim.N, sim.replicas,
                    sim.seed, M=lnac.M, grid_points=sim.grid_points,
                    cov_tol=lnac.tol, workers=threads)
    rows = [("clt", rep.N, k, "functional", float(v))
            for k, v in enumerate(rep.functional_values)]
    lead = slice(0, 6)
    out = _outdir(config)
    files = [
        write_rows(out / "study.csv",
                   ("study", "N", "replica", "statistic", "value"), rows),
        write_json(out / "report.json", {
            "study": "clt", "N": rep.N, "replicas": rep.replicas,
            "horizon": rep.horizon, "M": rep.M,
            "ks_stat": rep.ks_stat, "ks_pvalue": rep.ks_pvalue,
            "functional_variance": rep.functional_variance,
            "mean_head": _jsonable(rep.mean[lead]),
            "se_head": _jsonable(rep.se[lead]),
            "cov_emp_head": _jsonable(rep.cov_emp[lead, lead]),
            "cov_theory_head": _jsonable(rep.cov_theory[lead, lead]),
            "excluded_mass": rep.excluded_mass,
            "config_hash": config_hash(config), "seed": sim.seed,
        }),
    ]
    write_manifest(out, files, config, sim.seed)
    print(f"clt: N={rep.N}, KS p={rep.ks_pvalue:.4f} -> {out}")
    return 0


def cmd_check(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    report = check_assumptions(model)
    out = _outdir(config)
    payload = _jsonable(report)
    payload["passed"] = bool(report.passed)
    payload["config_hash"] = config_hash(config)
    files = [write_json(out / "check.json", payload)]
    write_manifest(out, files, config, config.simulation.seed)
    verdict = "pass" if report.passed else "FAIL"
    print(f"check: structural assumptions {verdict} "
          f"(w={report.w:.4g}, r0={report.r0:.4g}) -> {out}")
    return 0 if report.passed else 1


def cmd_exponents(config: RunConfig, threads: int = 1) -> int:
    model = config.model.build()
    expc = config.exponents
    betas = model.weights().betas
    report = exponent_calc(betas, expc.r0, expc.zeta_value())
    out = _outdir(config)
    payload = _jsonable(report)
    payload["config_hash"] = config_hash(config)
    files = [write_json(out / "exponents.json", payload)]
    write_manifest(out, files, config, config.simulation.seed)
    word = "feasible" if report.feasible else "infeasible"
    print(f"exponents: r0={expc.r0} zeta={report.zeta} -> {word}, "
          f"b1={report.b1:.6g}, b2={report.b2:.6g}, "
          f"threshold={report.threshold:.6g}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "meanfield": cmd_meanfield,
    "lna": cmd_lna,
    "lln": cmd_lln,
    "clt": cmd_clt,
    "check": cmd_check,
    "exponents": cmd_exponents,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metapop",
        description="Metapopulation jump-process simulator and limit toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS),
                        help="study to run")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file (defaults apply when omitted)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
    parser.add_argument("--out", type=str, default=None,
                        help="override the output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for replica fan-out")
    parser.add_argument("--grid", type=int, default=None,
                        help="override the number of checkpoint times")
    return parser


def _load_config(args) -> RunConfig:
    data = None
    if args.config is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config is not valid JSON (line {exc.lineno}, "
                f"column {exc.colno}): {exc.msg}") from exc
    config = RunConfig.from_dict(data)
    if args.seed is not None:
        config.simulation.seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.grid is not None:
        if args.grid < 2:
            raise ConfigError("--grid must be at least 2")
        config.simulation.grid_points = args.grid
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](config, threads=max(1, args.threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
