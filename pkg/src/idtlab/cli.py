"""Configuration-driven experiment runner.

Usage: ``idt-lab <scenario> --config path.json [--seed S] [--workers N]
[--out dir]``.  All numerics delegate to the library modules; this layer
only validates configuration, wires seeds, and emits deterministic report
and data files.  Exit status: 0 pass, 2 statistical reject, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels, measures, spectral, verify
from .constructions import radial_measure_from_json, sampler_from_json
from .errors import ConfigError, IdtLabError
from .paths import TimeGrid
from .reporting import canonical_json, write_csv, write_report
from .rng import SeedInfo
from .triplets import triplet_from_json

SCENARIOS = (
    "simulate",
    "idt-test",
    "mimic-test",
    "tsd-test",
    "spectral",
    "transform-measure",
    "path-measure-check",
)


def _expect_keys(obj: dict, required: tuple, optional: tuple, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing field(s) {sorted(missing)}")


def _floats(x, where: str) -> list:
    if not isinstance(x, list) or not x:
        raise ConfigError(f"{where} must be a nonempty array")
    try:
        return [float(v) for v in x]
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must contain numbers")


def _grid_values(spec, where: str) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(_floats(spec, where))
    _expect_keys(spec, ("min", "max", "count"), ("log",), where)
    lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["count"])
    if spec.get("log", False):
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


# --------------------------------------------------------------------------
# scenario runners: each returns (report_dict, data_tables, decision)
# --------------------------------------------------------------------------


def _run_simulate(cfg, seed, workers):
    _expect_keys(cfg, ("scenario", "construction", "times", "m"),
                 ("seed", "output"), "config")
    sampler = sampler_from_json(cfg["construction"])
    grid = TimeGrid.from_times(_floats(cfg["times"], "times"))
    m = int(cfg["m"])
    ens = sampler.sample(grid, m, SeedInfo(seed, 0), workers)
    term = ens.values[:, -1]
    rows = [
        (i, t, ens.values[i, j])
        for i in range(ens.m)
        for j, t in enumerate(grid.times)
    ]
    report = {
        "scenario": "simulate",
        "construction": sampler.spec,
        "m": m,
        "seed": seed,
        "times": grid.times.tolist(),
        "terminal_mean": float(term.mean()),
        "terminal_var": float(term.var(ddof=1)) if m > 1 else 0.0,
        "decision": "pass",
    }
    return report, {"data_paths.csv": (("path_id", "time", "value"), rows)}, "pass"


def _test_scenario_common(cfg, extra_required, extra_optional=()):
    _expect_keys(
        cfg,
        ("scenario", "construction", "times", "probes", "m", "level") + extra_required,
        ("seed", "output") + extra_optional,
        "config",
    )
    sampler = sampler_from_json(cfg["construction"])
    times = _floats(cfg["times"], "times")
    m = int(cfg["m"])
    level = float(cfg["level"])
    return sampler, times, m, level


def _parse_probes(raw, k, where="probes"):
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where} must be a nonempty array")
    out = [np.atleast_1d(np.asarray(p, dtype=float)) for p in raw]
    if any(p.shape != (k,) for p in out):
        raise ConfigError(f"each of {where} must have {k} component(s)")
    return out


def _run_idt_test(cfg, seed, workers):
    sampler, times, m, level = _test_scenario_common(cfg, ("n",))
    probes = _parse_probes(cfg["probes"], len(times))
    rep = verify.idt_property_test(
        sampler, int(cfg["n"]), times, probes, m, level, seed, workers
    )
    report = dict(rep.to_json_dict(), scenario="idt-test", construction=sampler.spec)
    return report, {}, rep.decision


def _run_mimic_test(cfg, seed, workers):
    sampler, times, m, level = _test_scenario_common(
        cfg, ("triplet",), ("joint_probes",)
    )
    triplet = triplet_from_json(cfg["triplet"])
    joint = cfg.get("joint_probes")
    if joint is not None:
        joint = _parse_probes(joint, len(times), "joint_probes")
        probes = _parse_probes(cfg["probes"], 1)
    else:
        probes = _parse_probes(cfg["probes"], 1)
    rep = verify.marginal_mimic_test(
        sampler, triplet, times, probes, m, level, seed, workers, joint_probes=joint
    )
    report = dict(rep.to_json_dict(), scenario="mimic-test", construction=sampler.spec)
    return report, {}, rep.decision


def _run_tsd_test(cfg, seed, workers):
    sampler, times, m, level = _test_scenario_common(cfg, ("c",))
    probes = _parse_probes(cfg["probes"], len(times))
    rep = verify.tsd_factorization_test(
        sampler, float(cfg["c"]), times, probes, m, level, seed, workers
    )
    report = dict(rep.to_json_dict(), scenario="tsd-test", construction=sampler.spec)
    return report, {}, rep.decision


def _run_spectral(cfg, seed, workers):
    _expect_keys(
        cfg,
        ("scenario", "phi", "y_grid", "pair_times"),
        ("seed", "output", "fourier_probes", "scaling_tol", "fourier_tol"),
        "config",
    )
    phi = kernels.kernel_from_json(cfg["phi"])
    y = _grid_values(cfg["y_grid"], "y_grid")
    pair_times = _floats(cfg["pair_times"], "pair_times")
    fourier_probes = _floats(cfg.get("fourier_probes", [0.5, 1.0, 2.0]), "fourier_probes")
    scaling_tol = float(cfg.get("scaling_tol", 1e-6))
    fourier_tol = float(
        cfg.get("fourier_tol", 1e-3 if isinstance(phi, kernels.BetaEdge) else 1e-4)
    )

    density = spectral.table_density(phi)
    dens_rows = [(float(yy), float(density.density(yy))) for yy in y]
    cov = spectral.CovarianceFn.from_phi(phi)
    cov_rows = [
        (float(s), float(t), float(cov(s, t))) for s in pair_times for t in pair_times
    ]

    pairs = [(s, t) for s in pair_times for t in pair_times]
    scaling = spectral.scaling_check(cov, [1.0 / 3.0, 0.5, 2.0, 5.0], pairs, scaling_tol)
    shift_pts = [(yy, zz) for yy in (-1.0, -0.3, 0.4, 1.1) for zz in (-1.0, 0.6)]
    lam_res = spectral.lamperti_shift_residual(cov, [0.5, -0.5, 2.0, -2.0], shift_pts)
    fourier_err = max(
        abs(spectral.fourier_of_density(density, x) - spectral.spectral_hat(phi, x))
        for x in fourier_probes
    )
    passed = scaling.passed and lam_res < scaling_tol and fourier_err < fourier_tol
    report = {
        "scenario": "spectral",
        "phi": kernels.kernel_to_json(phi),
        "seed": seed,
        "scaling_residual": scaling.statistic,
        "scaling_tol": scaling_tol,
        "lamperti_residual": lam_res,
        "fourier_max_abs_err": fourier_err,
        "fourier_tol": fourier_tol,
        "fourier_probes": fourier_probes,
        "decision": "pass" if passed else "reject",
    }
    if isinstance(phi, kernels.BetaEdge):
        report["series_tail_bound"] = spectral.beta_series_tail_bound(phi)
    tables = {
        "data_density.csv": (("y", "density"), dens_rows),
        "data_covariance.csv": (("s", "t", "covariance"), cov_rows),
    }
    return report, tables, report["decision"]


def _run_transform_measure(cfg, seed, workers):
    _expect_keys(
        cfg,
        ("scenario", "nu", "v_grid"),
        ("seed", "output", "reference", "tolerance"),
        "config",
    )
    nu = measures.scalar_measure_from_json(cfg["nu"])
    v_grid = _grid_values(cfg["v_grid"], "v_grid")
    reference = cfg.get("reference")
    tol = float(cfg.get("tolerance", 1e-3))
    rows = []
    max_rel = 0.0
    for v in v_grid:
        computed = measures.exp_mixture_density(nu, float(v))
        if reference == "inverse-sqrt-mixture":
            closed = 1.0 / np.sqrt(2.0 * v)
            max_rel = max(max_rel, abs(computed - closed) / closed)
            rows.append((float(v), computed, float(closed)))
        elif reference is None:
            rows.append((float(v), computed))
        else:
            raise ConfigError(f"unknown reference {reference!r}")
    header = ("v", "computed", "closed_form") if reference else ("v", "computed")
    decision = "pass" if (reference is None or max_rel < tol) else "reject"
    report = {
        "scenario": "transform-measure",
        "nu": measures.scalar_measure_to_json(nu),
        "seed": seed,
        "v_grid": [float(v) for v in v_grid],
        "max_relative_error": max_rel if reference else None,
        "tolerance": tol,
        "decision": decision,
    }
    return report, {"data_mixture.csv": (header, rows)}, decision


def _run_path_measure_check(cfg, seed, workers):
    _expect_keys(
        cfg,
        ("scenario", "measure", "u_max", "u_cells", "n_values", "functionals"),
        ("seed", "output", "lift", "tolerance"),
        "config",
    )
    base = measures.DiscretePathMeasure.from_json(cfg["measure"])
    u_max = float(cfg["u_max"])
    u_cells = int(cfg["u_cells"])
    do_lift = bool(cfg.get("lift", True))
    fls = [measures.functional_from_json(f) for f in cfg["functionals"]]
    tol = cfg.get("tolerance")
    measure = (
        measures.lift_path_measure(base, np.linspace(0.0, u_max, u_cells + 1))
        if do_lift
        else base
    )
    checks = []
    decision = "pass"
    for n in cfg["n_values"]:
        rep = measures.idt_scaling_check(
            measure, int(n), fls, tol=float(tol) if tol is not None else None
        )
        checks.append(
            {
                "n": int(n),
                "max_residual": rep.statistic,
                "tolerance": rep.threshold,
                "decision": rep.decision,
                "functionals": rep.details["functionals"],
            }
        )
        if not rep.passed:
            decision = "reject"
    report = {
        "scenario": "path-measure-check",
        "seed": seed,
        "lifted": do_lift,
        "u_resolution": measure.resolution,
        "checks": checks,
        "decision": decision,
    }
    return report, {}, decision


_RUNNERS = {
    "simulate": _run_simulate,
    "idt-test": _run_idt_test,
    "mimic-test": _run_mimic_test,
    "tsd-test": _run_tsd_test,
    "spectral": _run_spectral,
    "transform-measure": _run_transform_measure,
    "path-measure-check": _run_path_measure_check,
}


def run_experiment(config: dict, out_dir, workers: int = 1,
                   seed_override=None) -> int:
    """Execute one scenario; write report.json (+ data CSVs); return exit code."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    scenario = config.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {list(SCENARIOS)}")
    out_cfg = config.get("output", {})
    if out_cfg:
        _expect_keys(out_cfg, (), ("path", "format"), "output")
        if out_cfg.get("format", "csv") not in ("csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")
    if seed_override is not None:
        seed = int(seed_override)
    elif "seed" in config:
        seed = int(config["seed"])
    else:
        raise ConfigError("a seed is required (config field, --seed, or IDT_SEED)")
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    out_dir = Path(out_dir if out_dir is not None else out_cfg.get("path", "."))
    report, tables, decision = _RUNNERS[scenario](config, seed, workers)

    inline = out_cfg.get("format") == "json"
    for fname, (header, rows) in tables.items():
        if inline:
            report.setdefault("tables", {})[fname.removesuffix(".csv")] = {
                "header": list(header),
                "rows": [list(r) for r in rows],
            }
        else:
            write_csv(out_dir / fname, header, rows)
    write_report(report, out_dir / "report.json")
    return 0 if decision == "pass" else 2


def emit_report(report, fmt: str, path) -> Path:
    """Serialize a finished report deterministically as json or csv."""
    path = Path(path)
    if fmt == "json":
        obj = report.to_json_dict() if hasattr(report, "to_json_dict") else report
        return write_report(obj, path)
    if fmt == "csv":
        header, rows = report  # (header, rows) table shape
        return write_csv(path, header, rows)
    raise ConfigError("format must be 'json' or 'csv'")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="idt-lab",
        description="Scenario runner for time-divisible process experiments",
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)

    try:
        config = json.loads(Path(args.config).read_text())
        if config.get("scenario") != args.scenario:
            raise ConfigError(
                f"config scenario {config.get('scenario')!r} does not match "
                f"requested {args.scenario!r}"
            )
        seed_override = args.seed
        if seed_override is None and os.environ.get("IDT_SEED"):
            seed_override = int(os.environ["IDT_SEED"])
        return run_experiment(config, args.out, args.workers, seed_override)
    except (ConfigError, IdtLabError, OSError, ValueError, KeyError) as exc:
        sys.stderr.write(
            canonical_json({"error": type(exc).__name__, "detail": str(exc)}) + "\n"
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
