"""Command-line front end: ``cvqca <verb> [--config FILE] [--seed N] [--out DIR] ...``.

Exit codes: 0 success, 2 configuration or input validation error,
3 runtime or fit failure, 4 verify-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, config_digest, load_config
from .errors import ConfigError, CvqcaError, InvalidParameterError
from .estimation import NoisyHomodyneModel, NoisySeedModel, compare_models, fit_cost_model, fitted_curve
from .homodyne import child_seed, monte_carlo_sweep, process_trace, read_trace
from .landscape import fwhm, landscape_sweep
from .qca import (
    PrecisionStats,
    qca_run,
    robustness_scenarios,
    run_scenarios,
    squeezing_table,
    table_ratios,
    write_precision_table,
)
from .verify import run_verify

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4

VERBS = ("landscape", "qca", "precision", "fit", "ingest", "verify")


class Outputs:
    """Collects emitted files and writes the study summary with checksums."""

    def __init__(self, out: Path, command: str, cfg: ExperimentConfig):
        self.out = out
        self.command = command
        self.cfg = cfg
        self.files: list[Path] = []
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p)
        return p

    def write_json(self, name: str, payload) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return p

    def finish(self, results: dict) -> Path:
        listing = []
        for p in self.files:
            data = p.read_bytes()
            listing.append({"path": p.name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        summary = {
            "command": self.command,
            "seed": self.cfg.seed,
            "provenance": {
                "config_sha256": config_digest(self.cfg.resolved),
                "config": self.cfg.resolved,
                "versions": {
                    "cvqca": __version__,
                    "numpy": np.__version__,
                    "scipy": scipy.__version__,
                    "python": platform.python_version(),
                },
            },
            "results": results,
            "files": listing,
        }
        target = self.out / "summary.json"
        target.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return target


def _fmt(v: float) -> str:
    return f"{v:.17g}"


# ---------------------------------------------------------------------------
# verbs


def cmd_landscape(cfg: ExperimentConfig, out: Outputs) -> dict:
    grid = cfg.landscape_grid()
    results = {}
    for i, r in enumerate(cfg.landscape["r_values"]):
        base = cfg.model.replace(r=r)
        table = landscape_sweep(base, grid)
        table.to_csv(out.path(f"landscape_r{r:g}.csv"))
        entry = {"fwhm_rad": fwhm(table.delta_phi, table.cost), "cost_min": float(table.cost.min())}
        if cfg.landscape["mc"]:
            mc = monte_carlo_sweep(cfg.landscape["samples"], cfg.noise, child_seed(cfg.seed, i))
            mc_table = landscape_sweep(base, grid, mc=mc)
            mc_table.to_csv(out.path(f"landscape_r{r:g}_mc.csv"))
            entry["mc_cost_min"] = float(mc_table.cost.min())
        results[f"r={r:g}"] = entry
    return results


def cmd_qca(cfg: ExperimentConfig, out: Outputs) -> dict:
    record = qca_run(cfg.qca)
    if record.error:
        raise CvqcaError(f"run aborted: {record.error}")
    record.to_csv(out.path("qca_run.csv"))
    record.summary_json(out.path("qca_summary.json"))
    results = {"run": record.summary()}
    rob = cfg.robustness
    if rob["enabled"]:
        scenarios = robustness_scenarios(
            control_phases=[math.pi * c for c in rob["control_phases_pi"]],
            target_phases=[math.pi * t for t in rob["target_phases_pi"]],
            fixed_target=math.pi * rob["fixed_target_pi"],
            fixed_control=math.pi * rob["fixed_control_pi"],
        )
        records = run_scenarios(cfg.qca, scenarios, cfg.precision["n_jobs"])
        table = out.path("robustness.csv")
        with table.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["scenario", "phi_0_rad", "phi_c_init_rad", "converged", "t_opt", "mean_dphi_mrad"])
            for s, rec in zip(scenarios, records):
                rec.to_csv(out.path(f"qca_{s.label}.csv"))
                mean = rec.post_convergence_mean_dphi
                writer.writerow(
                    [s.label, _fmt(s.phi_0), _fmt(s.phi_c), rec.converged,
                     "" if rec.t_opt is None else rec.t_opt, "" if mean is None else _fmt(1e3 * mean)]
                )
        means = [r.post_convergence_mean_dphi for r in records if r.converged]
        results["robustness"] = {
            "runs": len(records),
            "converged": len(means),
            "pooled_sigma_dphi_mrad": 1e3 * PrecisionStats.from_means(means).std_of_means if len(means) >= 2 else None,
        }
    return results


def cmd_precision(cfg: ExperimentConfig, out: Outputs) -> dict:
    rows = squeezing_table(cfg.qca, cfg.precision["r_values"], cfg.precision["n_runs"], n_jobs=cfg.precision["n_jobs"])
    write_precision_table(rows, out.path("precision.csv"))
    results = {
        "n_runs": cfg.precision["n_runs"],
        "excluded": {f"r={row.r:g}": row.stats.excluded for row in rows},
    }
    if len({row.r for row in rows}) >= 2:
        speedup, precision = table_ratios(rows)
        results["time_to_solution_ratio"] = speedup
        results["precision_ratio"] = precision
    return results


def read_landscape_csv(path) -> dict:
    """Parse ``delta_phi_rad, cost[, variance][, cost_stderr]`` with row-numbered errors."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read landscape file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: file is empty") from None
        for required in ("delta_phi_rad", "cost"):
            if required not in header:
                raise ConfigError(f"{path}: header lacks column {required!r}")
        cols = {name: [] for name in header}
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}: row {rowno} has {len(row)} fields, expected {len(header)}")
            for name, cell in zip(header, row):
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    raise ConfigError(f"{path}: row {rowno}, column {name!r}: not a number: {cell!r}") from None
    data = {k: np.asarray(v) for k, v in cols.items()}
    order = np.argsort(data["delta_phi_rad"])
    return {k: v[order] for k, v in data.items()}


def cmd_fit(cfg: ExperimentConfig, out: Outputs, data: dict) -> dict:
    x, y = data["delta_phi_rad"], data["cost"]
    weights = None
    if cfg.fit["weighted"]:
        if "cost_stderr" not in data:
            raise ConfigError("fit.weighted needs a cost_stderr column")
        weights = 1.0 / data["cost_stderr"]
    variance = data.get("variance")
    models = {"noisy-seed": NoisySeedModel(), "noisy-homodyne": NoisyHomodyneModel()}
    dense = np.linspace(float(x.min()), float(x.max()), 401)
    fits = []
    results = {}
    for name in cfg.fit["models"]:
        model = models[name]
        res = fit_cost_model(
            x, y, epsilon=cfg.fit["epsilon"], bounds=cfg.fit_bounds, model=model, variance=variance,
            weights=weights, fwhm_fraction=cfg.fit["fwhm_fraction"], n_starts=cfg.fit["n_starts"], seed=cfg.seed,
        )
        fits.append(res)
        res.to_json(out.path(f"fit_{name}.json"))
        curve = fitted_curve(res, dense, cfg.fit["epsilon"], model)
        with out.path(f"fit_{name}_curve.csv").open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["delta_phi_rad", "cost_fit"])
            for d, c in zip(dense, curve):
                writer.writerow([_fmt(d), _fmt(c)])
        results[name] = res.to_dict()
    if len(fits) >= 2:
        comparison = compare_models(fits)
        out.write_json("model_comparison.json", comparison.to_dict())
        results["comparison"] = comparison.to_dict()
    return results


def cmd_ingest(cfg: ExperimentConfig, out: Outputs, trace) -> dict:
    estimates = [process_trace(trace, m, cfg.ingest["bins"]) for m in ("histogram-fit", "direct-variance")]
    hist, direct = estimates
    combined = math.hypot(hist.variance_stderr, direct.variance_stderr)
    z = abs(hist.variance_x_minus - direct.variance_x_minus) / combined if combined > 0 else math.inf
    with out.path("ingest_estimates.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "n_samples", "variance_x_minus", "cost", "stderr"])
        for e in estimates:
            writer.writerow([e.method, e.n_samples, _fmt(e.variance_x_minus), _fmt(e.cost), _fmt(e.stderr)])
    return {
        "estimates": {e.method: {"variance_x_minus": e.variance_x_minus, "cost": e.cost, "stderr": e.stderr} for e in estimates},
        "agreement_z": z,
        "agree_within_3_stderr": bool(z <= 3.0),
    }


def cmd_verify(cfg: ExperimentConfig, out: Outputs) -> tuple[dict, bool]:
    report = run_verify(
        seed=cfg.seed,
        oracle_points=cfg.verify["oracle_points"],
        mc_samples=cfg.verify["mc_samples"],
        mc_tolerance=cfg.verify["mc_tolerance"],
        mutation=cfg.verify["mutation"],
    )
    for line in report.lines():
        print(line)
    payload = report.to_dict()
    # wall-clock times would break byte-identical reruns
    for check in payload["checks"]:
        check.pop("seconds", None)
    out.write_json("verify.json", payload)
    return payload, report.passed


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvqca", description="Continuous-variable phase-compilation lab.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", type=Path, help="TOML study configuration")
        p.add_argument("--seed", type=int, help="global RNG seed (unsigned 64-bit)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--samples", type=int, help="samples per measurement window")
        p.add_argument("--mc", action="store_true", help="Monte Carlo landscape mode")
        if verb == "fit":
            p.add_argument("landscape", nargs="?", type=Path, help="landscape CSV (overrides fit.input)")
        if verb == "ingest":
            p.add_argument("trace", nargs="?", type=Path, help="trace file (.bin or .csv)")
            p.add_argument("--sidecar", type=Path, help="calibration JSON (default: trace path with .json)")
    return parser


def _overrides(args) -> dict:
    o: dict = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out is not None:
        o["out"] = str(args.out)
    if args.samples is not None:
        o["qca"] = {"samples_per_iteration": args.samples}
        o["landscape"] = {"samples": args.samples}
    if args.mc:
        o.setdefault("landscape", {})["mc"] = True
    if getattr(args, "landscape", None) is not None:
        o["fit"] = {"input": str(args.landscape)}
    if getattr(args, "trace", None) is not None:
        o["ingest"] = {"trace": str(args.trace)}
    if getattr(args, "sidecar", None) is not None:
        o.setdefault("ingest", {})["sidecar"] = str(args.sidecar)
    return o


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        # inputs are read and validated before anything is written
        extra = ()
        if args.verb == "fit":
            if not cfg.fit["input"]:
                raise ConfigError("fit needs a landscape CSV (positional argument or fit.input)")
            extra = (read_landscape_csv(cfg.fit["input"]),)
        elif args.verb == "ingest":
            if not cfg.ingest["trace"]:
                raise ConfigError("ingest needs a trace file (positional argument or ingest.trace)")
            extra = (read_trace(cfg.ingest["trace"], cfg.ingest["sidecar"] or None),)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        out = Outputs(cfg.out, args.verb, cfg)
        passed = True
        if args.verb == "verify":
            results, passed = cmd_verify(cfg, out)
        else:
            handler = {
                "landscape": cmd_landscape,
                "qca": cmd_qca,
                "precision": cmd_precision,
                "fit": cmd_fit,
                "ingest": cmd_ingest,
            }[args.verb]
            results = handler(cfg, out, *extra)
        summary = out.finish(results)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CvqcaError as exc:
        print(f"{args.verb} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {summary}")
    return EXIT_OK if passed else EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
