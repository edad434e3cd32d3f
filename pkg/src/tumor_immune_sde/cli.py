"""Command-line front end.

    tumor-immune simulate  [--config F] [--preset P] [--seed N] [--out DIR]
    tumor-immune classify  [--config F] [--preset P] [--out DIR]
    tumor-immune verify    --suite S [--config F] [--preset P] [--seed N] [--out DIR]
    tumor-immune figures   --which W [--config F] [--preset P] [--seed N] [--out DIR]

Flags override the corresponding config entries.  Exit codes: 0 success
(and, for verify, every assertion passed), 1 verification failure,
2 configuration error (including suite premise mismatches), 3 runtime or
simulation failure.  All outputs are byte-reproducible from
(config, seed); the worker count may be overridden with the
TUMOR_IMMUNE_WORKERS environment variable without changing any result.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .analytic import Regime, classify_regime
from .config import RunConfig, config_to_dict, parse_config
from .empirical import Sample, empirical_density, joint_histogram
from .ensemble import LOG_FLOOR, EnsembleSpec, _log_slope, run_ensemble
from .errors import ConfigError, DomainError, SimulationError
from .integrate import PathRecord
from .presets import PRESET_NAMES
from .verify import SUITE_NAMES, PremiseError, run_suite

__all__ = ["main", "entry"]

FIGURE_KINDS = ("paths", "phase", "density", "joint-density")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _provenance(cfg: RunConfig) -> dict:
    out = {
        "params": dataclasses.asdict(cfg.params),
        "initial": {"x": cfg.initial.x, "y": cfg.initial.y},
        "policy": {
            "scheme": cfg.policy.scheme.value,
            "dt": cfg.policy.dt,
            "eps_pos": cfg.policy.eps_pos,
            "max_halvings": cfg.policy.max_halvings,
        },
        "master_seed": cfg.ensemble.master_seed,
        "preset": cfg.preset,
    }
    if cfg.dimensional is not None:
        out["dimensional_params"] = dataclasses.asdict(cfg.dimensional)
    return out


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.outputs)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _path_record(result, j: int, cfg: RunConfig) -> PathRecord:
    return PathRecord(
        times=result.times,
        x=result.x[:, j],
        y=result.y[:, j],
        psi=None if result.psi is None else result.psi[:, j],
        phi=None if result.phi is None else result.phi[:, j],
        z=None if result.z is None else result.z[:, j],
        dt=cfg.policy.dt,
        seed=None,
        halvings=int(result.halvings[j]),
    )


def cmd_simulate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spec = dataclasses.replace(cfg.ensemble, n_paths=1)
    result = run_ensemble(cfg.params, cfg.initial, spec, which=cfg.coupled, t0_for_z=cfg.z_start_time)
    record = _path_record(result, 0, cfg)
    record.to_csv(out / "path.csv")

    mask = result.times >= spec.effective_burn_in
    summary = _provenance(cfg)
    summary.update(
        {
            "horizon": spec.horizon,
            "final_state": {"x": float(record.x[-1]), "y": float(record.y[-1])},
            "min": {"x": float(record.x.min()), "y": float(record.y.min())},
            "max": {"x": float(record.x.max()), "y": float(record.y.max())},
            "halvings": record.halvings,
            "underflow_points": int(np.count_nonzero(record.y <= LOG_FLOOR)),
            "log_y_slope_after_burn_in": _log_slope(result.times[mask], record.y[mask]),
            "csv": "path.csv",
        }
    )
    _write_json(out / "summary.json", summary)
    print(f"wrote {out / 'path.csv'} and {out / 'summary.json'}")
    return 0


def cmd_classify(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    report = classify_regime(cfg.params)
    payload = {"provenance": _provenance(cfg), "report": report.to_json_dict()}
    _write_json(out / "regime.json", payload)
    print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    return 0


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    out = _out_dir(cfg)
    result = run_suite(
        suite,
        cfg.params,
        cfg.initial,
        cfg.policy,
        cfg.ensemble.master_seed,
        **cfg.verify_kwargs(),
    )
    payload = {"provenance": _provenance(cfg), "result": result.to_json_dict()}
    _write_json(out / f"verify_{suite}.json", payload)
    for a in result.assertions:
        print(f"[{'PASS' if a.passed else 'FAIL'}] {a.name}: measured={a.measured!r} bound={a.bound!r}")
    print(f"suite {suite}: {'PASS' if result.passed else 'FAIL'}")
    return 0 if result.passed else 1


def cmd_figures(cfg: RunConfig, which: str) -> int:
    out = _out_dir(cfg)
    files: list[str] = []
    spec = cfg.ensemble

    if which == "paths":
        result = run_ensemble(cfg.params, cfg.initial, spec, which=cfg.coupled, t0_for_z=cfg.z_start_time)
        for j in range(result.n_paths):
            name = f"paths_{j:03d}.csv"
            _path_record(result, j, cfg).to_csv(out / name)
            files.append(name)
    elif which == "phase":
        result = run_ensemble(cfg.params, cfg.initial, spec)
        mask = result.times >= spec.effective_burn_in
        data = np.column_stack([result.x[mask, 0], result.y[mask, 0]])
        name = "phase.csv"
        with open(out / name, "w", newline="") as fh:
            fh.write("x,y\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")
        files.append(name)
    elif which == "density":
        if spec.n_paths < 50:
            raise ConfigError("ensemble.n_paths", "density figures need at least 50 paths")
        result = run_ensemble(cfg.params, cfg.initial, spec)
        xs = result.at_time("x", spec.horizon)
        curve = empirical_density(Sample(xs, origin=f"x(T={spec.horizon:g}) across paths"))
        report = classify_regime(cfg.params)
        law = report.boundary_z_law if report.regime is Regime.EXTINCTION else report.aux_phi_law
        if law is None:
            raise ConfigError("params", "no analytic comparison law exists for these parameters")
        curve.to_csv(out / "density_x_empirical.csv")
        files.append("density_x_empirical.csv")
        name = "density_x_analytic.csv"
        with open(out / name, "w", newline="") as fh:
            fh.write("grid,density\n")
            np.savetxt(
                fh, np.column_stack([curve.grid, law.pdf(curve.grid)]), delimiter=",", fmt="%.17g"
            )
        files.append(name)
    elif which == "joint-density":
        if spec.n_paths < 50:
            raise ConfigError("ensemble.n_paths", "joint-density figures need at least 50 paths")
        result = run_ensemble(cfg.params, cfg.initial, spec)
        hist = joint_histogram(result.at_time("x", spec.horizon), result.at_time("y", spec.horizon))
        hist.to_csv(out / "joint_density.csv")
        files.append("joint_density.csv")
    else:
        raise ConfigError("figures.which", f"expected one of {FIGURE_KINDS}, got {which!r}")

    manifest = {"which": which, "files": files, "provenance": _provenance(cfg)}
    _write_json(out / "figures_manifest.json", manifest)
    files.append("figures_manifest.json")
    print(f"wrote {', '.join(files)} in {out}")
    return 0


def _build_config(args) -> RunConfig:
    if args.config is not None:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    else:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config document must be a JSON object")
    if args.preset is not None:
        doc["preset"] = args.preset
    if args.seed is not None:
        doc.setdefault("ensemble", {})["master_seed"] = args.seed
    if args.out is not None:
        doc["outputs"] = args.out
    return parse_config(doc)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tumor-immune",
        description="Simulate and verify the stochastic tumor-immune system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--preset", choices=PRESET_NAMES, help="named parameter preset")
        sp.add_argument("--seed", type=int, help="master seed override")
        sp.add_argument("--out", help="output directory override")

    common(sub.add_parser("simulate", help="integrate one path; write CSV + summary JSON"))
    common(sub.add_parser("classify", help="evaluate thresholds and classify the regime"))
    sp = sub.add_parser("verify", help="run a verification suite")
    common(sp)
    sp.add_argument("--suite", required=True, choices=SUITE_NAMES)
    sp = sub.add_parser("figures", help="export plot-ready CSV bundles")
    common(sp)
    sp.add_argument("--which", required=True, choices=FIGURE_KINDS)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "classify":
            return cmd_classify(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        if args.command == "figures":
            return cmd_figures(cfg, args.which)
        raise ConfigError("<command>", f"unknown command {args.command!r}")
    except (ConfigError, PremiseError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
