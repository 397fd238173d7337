"""Command-line harness: run every experiment in either or both pipeline modes.

Each subcommand resolves its settings from (in rising precedence) built-in
defaults, a JSON config file, and command-line flags, then writes three
artifacts into the output directory: ``report.json`` with the full run
record, ``runs.csv`` with one summary row per executed run, and a
``fig_<subcommand>.csv`` data table shaped for plotting.  ``fit-costmodel``
instead writes ``costmodel.json``, which any other subcommand's config can
point at through its ``cost_model`` key.

Exit codes: 0 success, 2 configuration or usage error (nothing is written),
1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .devcomp import CostModel
from .drivers.accounting import RunCosts
from .drivers.calibration import run_calibration
from .drivers.rb import RB_CIRCUITS_PER_LENGTH, RB_LENGTHS, RB_SHOTS, run_rb
from .drivers.vqe import VqeProblem, one_param_problem, run_vqe, two_param_problem
from .fitting import FitResult, calibrated_dataset, fit_cost_model
from .scenarios.cloud import (
    CLOUD_JOBS,
    CLOUD_SHOTS_PER_JOB,
    DISTRIBUTIONS,
    SIZE_CLASSES,
    CloudWorkload,
    simulate_cloud,
)
from .scenarios.contour import sweep_machines
from .scenarios.optimus import (
    OPTIMUS_DRIFT_RATES,
    OPTIMUS_SHOTS,
    OPTIMUS_SPSA_STEPS,
    run_optimus,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

SEED_ENV = "DLPC_SEED"

RUNS_FIELDS = (
    "subcommand",
    "mode",
    "seed",
    "label",
    "n_compiles",
    "compile_s",
    "upload_s",
    "schedule_s",
    "device_s",
    "rpc_s",
    "overhead_s",
    "total_s",
    "compile_fraction",
)


class ConfigError(Exception):
    """Bad flags, config file, or environment; nothing has been written."""


# ---------------------------------------------------------------- config

_SCHEMAS: dict[str, dict[str, type | tuple[type, ...]]] = {
    "vqe": {
        "problem": str,
        "shots": int,
        "max_evals": int,
        "depolarizing": (int, float),
    },
    "calibrate": {"n_qubits": (int, list)},
    "rb": {
        "depolarizing": (int, float),
        "shots": int,
        "per_length": int,
        "lengths": list,
    },
    "cloud": {
        "distributions": list,
        "size_classes": list,
        "n_jobs": int,
        "shots_per_job": int,
        "t_1q_us": (int, float),
        "t_2q_us": (int, float),
    },
    "optimus": {
        "drift_rates": list,
        "n_samples": int,
        "n_nodes": int,
        "spsa_steps": int,
        "shots": int,
    },
    "contour": {"t_1q_us": list, "t_2q_us": list, "iterations": int},
    "fit-costmodel": {},
}

_COMMON_KEYS: dict[str, type | tuple[type, ...]] = {
    "seed": int,
    "cost_model": (str, dict),
}


def _load_config(path: str | None, subcommand: str) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    schema = _SCHEMAS[subcommand] | _COMMON_KEYS
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for {subcommand}")
        if not isinstance(value, schema[key]):
            raise ConfigError(
                f"config key {key!r} must be {schema[key]}, got {type(value).__name__}"
            )
    return raw


def _resolve_seed(flag: int | None, config: dict[str, Any]) -> int:
    if flag is not None:
        return flag
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return 0


def _resolve_fit(config: dict[str, Any]) -> FitResult:
    """Cost model from config (inline dict or costmodel.json path), else fitted."""
    spec = config.get("cost_model")
    if spec is None:
        return fit_cost_model()
    if isinstance(spec, str):
        p = Path(spec)
        if not p.is_file():
            raise ConfigError(f"cost_model file not found: {spec}")
        try:
            spec = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cost_model file {p} is not valid JSON: {exc}") from exc
    try:
        params = spec["cost_model"]
        model = CostModel(
            compile_a=float(params["compile_a"]), compile_b=float(params["compile_b"])
        )
        return FitResult(
            cost_model=model,
            prep_us=float(spec["prep_us"]),
            detect_us=float(spec["detect_us"]),
            reproduced=dict(spec.get("reproduced", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cost_model entry is malformed: {exc}") from exc


def _setting(flag: Any, config: dict[str, Any], key: str, default: Any) -> Any:
    if flag is not None:
        return flag
    return config.get(key, default)


# ---------------------------------------------------------------- output

def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj: dict) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, fields: tuple[str, ...], rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def _run_row(subcommand: str, mode: str, seed: int, label: str, costs: RunCosts) -> dict:
    return {
        "subcommand": subcommand,
        "mode": mode,
        "seed": seed,
        "label": label,
        "n_compiles": costs.n_compiles,
        "compile_s": costs.compile_s,
        "upload_s": costs.upload_s,
        "schedule_s": costs.schedule_s,
        "device_s": costs.device_s,
        "rpc_s": costs.rpc_s,
        "overhead_s": costs.overhead_s,
        "total_s": costs.total_s,
        "compile_fraction": costs.compile_fraction,
    }


def _comparison(costs: dict[str, RunCosts]) -> dict:
    base, dlpc = costs["baseline"], costs["dlpc"]
    return {
        "speedup": base.total_s / dlpc.total_s,
        "compile_count": {"baseline": base.n_compiles, "dlpc": dlpc.n_compiles},
        "compile_fraction": {
            "baseline": base.compile_fraction,
            "dlpc": dlpc.compile_fraction,
        },
        "device_fraction": {
            "baseline": base.device_fraction,
            "dlpc": dlpc.device_fraction,
        },
        "total_s": {"baseline": base.total_s, "dlpc": dlpc.total_s},
    }


def _modes(mode: str) -> tuple[str, ...]:
    return ("baseline", "dlpc") if mode == "both" else (mode,)


# ------------------------------------------------------------ subcommands

def _cmd_vqe(args, config: dict[str, Any], fit: FitResult, seed: int):
    name = str(config.get("problem", "one_param"))
    makers = {"one_param": one_param_problem, "two_param": two_param_problem}
    if name not in makers:
        raise ConfigError(f"problem must be one of {sorted(makers)}, got {name!r}")
    problem: VqeProblem = makers[name]()
    shots = int(_setting(args.shots, config, "shots", problem.shots))
    max_evals = int(_setting(args.iterations, config, "max_evals", problem.max_evals))
    problem = replace(problem, shots=shots, max_evals=max_evals)
    depolarizing = float(config.get("depolarizing", 0.0))

    reports: dict[str, dict] = {}
    costs: dict[str, RunCosts] = {}
    runs: list[dict] = []
    fig: list[dict] = []
    for mode in _modes(args.mode):
        rep = run_vqe(
            problem,
            mode,
            cost_model=fit.cost_model,
            calib=calibrated_dataset(problem.ansatz.n_qubits, fit),
            run_seed=seed,
            depolarizing=depolarizing,
        )
        reports[mode] = rep.to_json_dict()
        costs[mode] = rep.costs
        runs.append(_run_row("vqe", mode, seed, name, rep.costs))
        for k, (x, energy) in enumerate(rep.trajectory):
            fig.append(
                {
                    "mode": mode,
                    "eval_idx": k,
                    "energy": energy,
                    "params": json.dumps(list(x)),
                }
            )

    spec = {
        "problem": name,
        "shots": shots,
        "max_evals": max_evals,
        "depolarizing": depolarizing,
    }
    report = {"spec": spec, "reports": reports}
    if args.mode == "both":
        report["comparison"] = _comparison(costs)
    return report, runs, fig, ("mode", "eval_idx", "energy", "params")


def _cmd_calibrate(args, config: dict[str, Any], fit: FitResult, seed: int):
    raw = config.get("n_qubits", list(range(2, 11)))
    sizes = [raw] if isinstance(raw, int) else [int(n) for n in raw]
    if not sizes or any(n < 1 for n in sizes):
        raise ConfigError(f"n_qubits must be positive, got {raw!r}")

    reports: dict[str, dict] = {}
    comparison: dict[str, dict] = {}
    runs: list[dict] = []
    fig: list[dict] = []
    for n in sizes:
        per_mode: dict[str, RunCosts] = {}
        reports[str(n)] = {}
        for mode in _modes(args.mode):
            rep = run_calibration(
                calibrated_dataset(n, fit), mode, cost_model=fit.cost_model, run_seed=seed
            )
            reports[str(n)][mode] = rep.to_json_dict()
            per_mode[mode] = rep.costs
            runs.append(_run_row("calibrate", mode, seed, f"n_qubits={n}", rep.costs))
            fig.append(
                {
                    "n_qubits": n,
                    "mode": mode,
                    "n_experiments": rep.n_experiments,
                    "n_compiles": rep.costs.n_compiles,
                    "compile_s": rep.costs.compile_s,
                    "total_s": rep.costs.total_s,
                    "compile_fraction": rep.costs.compile_fraction,
                }
            )
        if args.mode == "both":
            comparison[str(n)] = _comparison(per_mode)

    report: dict[str, Any] = {"spec": {"n_qubits": sizes}, "reports": reports}
    if args.mode == "both":
        report["comparison"] = comparison
    fields = (
        "n_qubits",
        "mode",
        "n_experiments",
        "n_compiles",
        "compile_s",
        "total_s",
        "compile_fraction",
    )
    return report, runs, fig, fields


def _cmd_rb(args, config: dict[str, Any], fit: FitResult, seed: int):
    depolarizing = float(config.get("depolarizing", 0.0))
    shots = int(_setting(args.shots, config, "shots", RB_SHOTS))
    per_length = int(_setting(args.iterations, config, "per_length", RB_CIRCUITS_PER_LENGTH))
    lengths = tuple(int(m) for m in config.get("lengths", RB_LENGTHS))

    reports: dict[str, dict] = {}
    costs: dict[str, RunCosts] = {}
    runs: list[dict] = []
    fig: list[dict] = []
    for mode in _modes(args.mode):
        rep = run_rb(
            mode,
            cost_model=fit.cost_model,
            calib=calibrated_dataset(1, fit),
            depolarizing=depolarizing,
            run_seed=seed,
            lengths=lengths,
            per_length=per_length,
            shots=shots,
        )
        reports[mode] = rep.to_json_dict()
        costs[mode] = rep.costs
        runs.append(_run_row("rb", mode, seed, f"depol={depolarizing}", rep.costs))
        for m in lengths:
            fig.append(
                {
                    "mode": mode,
                    "length": m,
                    "mean_survival": rep.mean_by_length[m],
                    "fitted_p": rep.fit.p,
                }
            )

    spec = {
        "depolarizing": depolarizing,
        "shots": shots,
        "per_length": per_length,
        "lengths": list(lengths),
    }
    report = {"spec": spec, "reports": reports}
    if args.mode == "both":
        report["comparison"] = _comparison(costs)
    return report, runs, fig, ("mode", "length", "mean_survival", "fitted_p")


def _cmd_cloud(args, config: dict[str, Any], fit: FitResult, seed: int):
    dists = tuple(str(d) for d in config.get("distributions", DISTRIBUTIONS))
    sizes = tuple(str(s) for s in config.get("size_classes", SIZE_CLASSES))
    n_jobs = int(_setting(args.iterations, config, "n_jobs", CLOUD_JOBS))
    shots = int(_setting(args.shots, config, "shots_per_job", CLOUD_SHOTS_PER_JOB))
    t_1q = float(config.get("t_1q_us", 5.0))
    t_2q = float(config.get("t_2q_us", 150.0))

    reports: dict[str, dict] = {}
    comparison: dict[str, dict] = {}
    runs: list[dict] = []
    fig: list[dict] = []
    for dist in dists:
        for size in sizes:
            cell = f"{dist}/{size}"
            workload = CloudWorkload(
                distribution=dist,
                size_class=size,
                n_jobs=n_jobs,
                shots_per_job=shots,
                seed=seed,
            )
            per_mode: dict[str, Any] = {}
            for mode in _modes(args.mode):
                rep = simulate_cloud(
                    workload,
                    mode,
                    cost_model=fit.cost_model,
                    prep_us=fit.prep_us,
                    detect_us=fit.detect_us,
                    t_1q_us=t_1q,
                    t_2q_us=t_2q,
                )
                per_mode[mode] = rep
                runs.append(
                    {
                        "subcommand": "cloud",
                        "mode": mode,
                        "seed": seed,
                        "label": cell,
                        "n_compiles": rep.n_compiles,
                        "compile_s": rep.compile_total_s,
                        "upload_s": "",
                        "schedule_s": "",
                        "device_s": rep.exec_total_s,
                        "rpc_s": "",
                        "overhead_s": rep.compile_total_s,
                        "total_s": rep.compile_total_s + rep.exec_total_s,
                        "compile_fraction": rep.compile_total_s
                        / (rep.compile_total_s + rep.exec_total_s),
                    }
                )
                fig.append(
                    {
                        "distribution": dist,
                        "size_class": size,
                        "mode": mode,
                        "n_compiles": rep.n_compiles,
                        "compile_total_s": rep.compile_total_s,
                        "compile_total_min": rep.compile_total_s / 60.0,
                        "exec_total_s": rep.exec_total_s,
                        "makespan_s": rep.makespan_s,
                    }
                )
            reports[cell] = {m: r.to_json_dict() for m, r in per_mode.items()}
            if args.mode == "both":
                comparison[cell] = {
                    "compile_s": {
                        "baseline": per_mode["baseline"].compile_total_s,
                        "dlpc": per_mode["dlpc"].compile_total_s,
                    },
                    "compile_count": {
                        "baseline": per_mode["baseline"].n_compiles,
                        "dlpc": per_mode["dlpc"].n_compiles,
                    },
                    "compile_ratio": per_mode["dlpc"].compile_total_s
                    / per_mode["baseline"].compile_total_s,
                }

    spec = {
        "distributions": list(dists),
        "size_classes": list(sizes),
        "n_jobs": n_jobs,
        "shots_per_job": shots,
        "t_1q_us": t_1q,
        "t_2q_us": t_2q,
    }
    report: dict[str, Any] = {"spec": spec, "reports": reports}
    if args.mode == "both":
        report["comparison"] = comparison
    fields = (
        "distribution",
        "size_class",
        "mode",
        "n_compiles",
        "compile_total_s",
        "compile_total_min",
        "exec_total_s",
        "makespan_s",
    )
    return report, runs, fig, fields


def _cmd_optimus(args, config: dict[str, Any], fit: FitResult, seed: int):
    drift_rates = tuple(float(r) for r in config.get("drift_rates", OPTIMUS_DRIFT_RATES))
    n_samples = int(config.get("n_samples", 100))
    spsa_steps = int(_setting(args.iterations, config, "spsa_steps", OPTIMUS_SPSA_STEPS))
    shots = int(_setting(args.shots, config, "shots", OPTIMUS_SHOTS))
    kwargs: dict[str, Any] = {}
    if "n_nodes" in config:
        kwargs["n_nodes"] = int(config["n_nodes"])

    rep = run_optimus(
        cost_model=fit.cost_model,
        calib=calibrated_dataset(5, fit),
        drift_rates=drift_rates,
        n_samples=n_samples,
        spsa_steps=spsa_steps,
        shots=shots,
        seed=seed,
        **kwargs,
    )

    wanted = _modes(args.mode)
    aggregates = [a for a in rep.aggregates if a.mode in wanted]
    runs: list[dict] = []
    fig: list[dict] = []
    comparison: dict[str, dict] = {}
    for agg in aggregates:
        fig.append(agg.to_json_dict())
        runs.append(
            {
                "subcommand": "optimus",
                "mode": agg.mode,
                "seed": seed,
                "label": f"drift={agg.drift_rate}",
                "n_compiles": agg.mean_compile_count,
                "compile_s": "",
                "upload_s": "",
                "schedule_s": "",
                "device_s": "",
                "rpc_s": "",
                "overhead_s": "",
                "total_s": agg.mean_total_s,
                "compile_fraction": agg.mean_compile_fraction,
            }
        )
    if args.mode == "both":
        for rate in drift_rates:
            base = rep.aggregate(rate, "baseline")
            dlpc = rep.aggregate(rate, "dlpc")
            comparison[str(rate)] = {
                "speedup": base.mean_total_s / dlpc.mean_total_s,
                "compile_fraction": {
                    "baseline": base.mean_compile_fraction,
                    "dlpc": dlpc.mean_compile_fraction,
                },
            }

    spec = {
        "drift_rates": list(drift_rates),
        "n_samples": n_samples,
        "spsa_steps": spsa_steps,
        "shots": shots,
        "n_nodes": kwargs.get("n_nodes", "default"),
    }
    report: dict[str, Any] = {
        "spec": spec,
        "n_evals": rep.n_evals,
        "reports": [a.to_json_dict() for a in aggregates],
    }
    if args.mode == "both":
        report["comparison"] = comparison
    fields = (
        "drift_rate",
        "mode",
        "mean_cal_s",
        "stderr_cal_s",
        "mean_compile_count",
        "stderr_compile_count",
        "mean_compile_fraction",
        "stderr_compile_fraction",
        "mean_total_s",
    )
    return report, runs, fig, fields


def _cmd_contour(args, config: dict[str, Any], fit: FitResult, seed: int):
    # inherently comparative: both pipelines are priced at every grid point
    kwargs: dict[str, Any] = {}
    if "t_1q_us" in config:
        kwargs["t_1q_us"] = tuple(float(t) for t in config["t_1q_us"])
    if "t_2q_us" in config:
        kwargs["t_2q_us"] = tuple(float(t) for t in config["t_2q_us"])
    iterations = _setting(args.iterations, config, "iterations", None)
    if iterations is not None:
        kwargs["iterations"] = int(iterations)

    rep = sweep_machines(cost_model=fit.cost_model, **kwargs)
    fig: list[dict] = []
    for r, t2 in enumerate(rep.t_2q_us):
        for c, t1 in enumerate(rep.t_1q_us):
            fig.append(
                {
                    "t_1q_us": t1,
                    "t_2q_us": t2,
                    "ratio": float(rep.ratio[r, c]),
                    "baseline_fraction": float(rep.baseline_fraction[r, c]),
                    "dlpc_fraction": float(rep.dlpc_fraction[r, c]),
                }
            )
    runs = [
        {
            "subcommand": "contour",
            "mode": "both",
            "seed": seed,
            "label": name,
            "n_compiles": "",
            "compile_s": "",
            "upload_s": "",
            "schedule_s": "",
            "device_s": "",
            "rpc_s": "",
            "overhead_s": "",
            "total_s": "",
            "compile_fraction": point["dlpc_fraction"],
        }
        for name, point in rep.machines.items()
    ]
    report = {
        "spec": {
            "iterations": kwargs.get("iterations", "default"),
            "grid": [len(rep.t_2q_us), len(rep.t_1q_us)],
        },
        "reports": rep.to_json_dict(),
    }
    fields = ("t_1q_us", "t_2q_us", "ratio", "baseline_fraction", "dlpc_fraction")
    return report, runs, fig, fields


# ------------------------------------------------------------------ main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlpc",
        description="Compare per-iteration kernel recompilation against "
        "partial compilation with runtime parameter streaming.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "vqe": "variational energy minimization, one or two angles",
        "calibrate": "full calibration day over every qubit and pair",
        "rb": "single-qubit randomized benchmarking",
        "cloud": "day-long shared-queue dispatch study",
        "optimus": "probe-and-repair calibration under drift",
        "contour": "compile-share ratio across gate-speed regimes",
        "fit-costmodel": "fit the cost model and write costmodel.json",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument(
            "--mode",
            choices=("baseline", "dlpc", "both"),
            default="both",
            help="which pipeline(s) to run (default: both)",
        )
        p.add_argument("--config", help="JSON config file for this subcommand")
        p.add_argument(
            "--seed",
            type=int,
            help=f"run seed (default: config, then ${SEED_ENV}, then 0)",
        )
        p.add_argument(
            "--out",
            default="dlpc-out",
            help="output directory (default: dlpc-out)",
        )
        p.add_argument(
            "--shots",
            type=int,
            help="override shots per evaluation/job where the study uses them",
        )
        p.add_argument(
            "--iterations",
            type=int,
            help="override evaluations/jobs/steps where the study uses them",
        )
        p.add_argument(
            "--deterministic",
            action="store_true",
            help="omit timestamps so identical specs give identical bytes",
        )
    return parser


_RUNNERS = {
    "vqe": _cmd_vqe,
    "calibrate": _cmd_calibrate,
    "rb": _cmd_rb,
    "cloud": _cmd_cloud,
    "optimus": _cmd_optimus,
    "contour": _cmd_contour,
}

_FIG_NAMES = {"calibrate": "fig_calib.csv"}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)

    try:
        config = _load_config(args.config, args.subcommand)
        seed = _resolve_seed(args.seed, config)
        fit = _resolve_fit(config)
    except ConfigError as exc:
        print(f"dlpc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    try:
        if args.subcommand == "fit-costmodel":
            report = {
                "subcommand": "fit-costmodel",
                "seed": seed,
                **fit.to_json_dict(),
            }
            if not args.deterministic:
                report["generated_at"] = datetime.now(timezone.utc).isoformat()
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "costmodel.json", fit.to_json_dict())
            _write_json(out / "report.json", report)
        else:
            body, runs, fig, fig_fields = _RUNNERS[args.subcommand](
                args, config, fit, seed
            )
            report = {
                "subcommand": args.subcommand,
                "mode": args.mode,
                "seed": seed,
                "cost_model": fit.to_json_dict()["cost_model"],
                **body,
            }
            if not args.deterministic:
                report["generated_at"] = datetime.now(timezone.utc).isoformat()
            out.mkdir(parents=True, exist_ok=True)
            fig_name = _FIG_NAMES.get(args.subcommand, f"fig_{args.subcommand}.csv")
            _write_csv(out / "runs.csv", RUNS_FIELDS, runs)
            _write_csv(out / fig_name, fig_fields, fig)
            _write_json(out / "report.json", report)
    except ConfigError as exc:
        print(f"dlpc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"dlpc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
