"""Command-line front end: ``randlase simulate|scan-spectrum|scan-threshold|validate``.

Every experiment writes its result tables plus ``resolved_config.toml`` into
the output directory.  Output bytes depend only on the resolved configuration
(seed included), never on the worker count or the kernel backend.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from .analysis import (BracketError, ScanParam, Verdict, classify_stability, spectral_scan,
                       threshold_scan)
from .config import ConfigError, ExperimentConfig, PRESETS, parse_config, to_toml, with_overrides
from .transport import Tally

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

ORDERS_HEADER = ("order", "elastic_weight", "anti_stokes_weight", "detector_cone_weight")
SPECTRUM_HEADER = ("delta_c", "b0", "elastic", "anti_stokes", "sum", "diverged")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json_num(x):
    """JSON has no inf/nan; map them to strings so files stay valid."""
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _json_num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_num(v) for v in x]
    return x


def _dump_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_json_num(data), indent=2, sort_keys=False) + "\n", encoding="utf-8")


def config_echo(cfg: ExperimentConfig) -> dict:
    # the output location is not part of the experiment
    echo = cfg.echo()
    echo.pop("output_dir", None)
    return echo


def write_orders(path: Path, tally: Tally) -> None:
    cone = tally.detector_cone.sum(axis=0)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ORDERS_HEADER)
        for n in range(tally.max_order + 1):
            w.writerow((n, fmt(tally.escaped[0, n]), fmt(tally.escaped[1, n]), fmt(cone[n])))


def write_spectrum(path: Path, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPECTRUM_HEADER)
        for r in rows:
            if r.diverged:
                vals = ("", "", "")
            else:
                vals = (fmt(r.elastic), fmt(r.anti_stokes), fmt(r.sum))
            w.writerow((fmt(r.delta_c), fmt(r.b0), *vals, "true" if r.diverged else "false"))


def _simulate(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    tally = cfg.scenario().simulate(workers)
    rep = classify_stability(tally, cfg.run, min_count=cfg.scan["min_count"])
    write_orders(out / "orders.csv", tally)
    summary = {
        "photons_launched": tally.photons_launched,
        "total_escaped": tally.total_escaped,
        "escaped_elastic": float(tally.escaped_elastic.sum()),
        "escaped_anti_stokes": float(tally.escaped_anti_stokes.sum()),
        "detector_cone": float(tally.detector_cone.sum()),
        "truncated_weight": tally.truncated_weight,
        "truncated_fraction": rep.truncated_fraction,
        "q": rep.q,
        "q_err": rep.q_err,
        "verdict": rep.verdict.value,
        "window": list(rep.window) if rep.window else None,
        "diverged": tally.diverged,
        "seed": cfg.run.seed,
        "config": config_echo(cfg),
    }
    _dump_json(out / "summary.json", summary)
    print(f"q={rep.q:.6g} +- {rep.q_err:.2g} verdict={rep.verdict.value} "
          f"truncated_fraction={rep.truncated_fraction:.3g}")
    if cfg.fail_on_divergence and (tally.diverged or rep.verdict is Verdict.DIVERGING):
        print("error: run is diverging (set fail_on_divergence = false to allow)",
              file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _scan_spectrum(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    sc = cfg.scan
    rows = spectral_scan(cfg.scenario(), cfg.delta_c_grid(), sc["b0_values"],
                         math.radians(sc["observation_angle_deg"]),
                         math.radians(sc["observation_half_width_deg"]), workers=workers)
    write_spectrum(out / "spectrum.csv", rows)
    n_div = sum(r.diverged for r in rows)
    print(f"{len(rows)} rows, {n_div} diverged")
    if n_div and cfg.fail_on_divergence:
        print("error: spectral scan hit diverging points", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _scan_threshold(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    sc = cfg.scan
    try:
        rep = threshold_scan(cfg.scenario(), ScanParam(sc["param"]), (sc["lo"], sc["hi"]),
                             tol=sc["tol"], extrapolation=sc["extrapolation"], workers=workers,
                             min_count=sc["min_count"])
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    data = rep.to_dict()
    data["seed"] = cfg.run.seed
    data["config"] = config_echo(cfg)
    _dump_json(out / "threshold.json", data)
    print(f"critical {rep.scan_param.value} = {rep.critical_value:.6g} "
          f"bracket=[{rep.bracket[0]:.6g}, {rep.bracket[1]:.6g}] resolved={rep.resolved}")
    return EXIT_OK


def _validate(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    from .validation import run_suite
    results = run_suite(workers=workers)
    for r in results:
        print(r.line())
    _dump_json(out / "validation.json", {
        "checks": [{"name": r.name, "passed": r.passed, "value": r.value,
                    "expected": r.expected, "tolerance": r.tolerance, "detail": r.detail}
                   for r in results],
        "passed": all(r.passed for r in results),
    })
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


_RUNNERS = {
    "simulate": _simulate,
    "scan_spectrum": _scan_spectrum,
    "scan_threshold": _scan_threshold,
    "validate": _validate,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> int:
    """Run ``cfg`` and write its files; returns the process exit status."""
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".randlase-write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    (out / "resolved_config.toml").write_text(to_toml(config_echo(cfg)), encoding="utf-8")
    return _RUNNERS[cfg.experiment](cfg, out, workers)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randlase",
                                description="Monte-Carlo random-laser transport in cold atoms.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "scan-spectrum", "scan-threshold", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="TOML experiment file")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        sp.add_argument("--photons", type=int, help="photon histories per run")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="threads for the transport engine (does not change results)")
    return p


def load(args) -> ExperimentConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = parse_config(text, args.preset)
    return with_overrides(cfg, seed=args.seed, photons=args.photons, output_dir=args.out,
                          experiment=args.command.replace("-", "_"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print("config error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg, workers=args.workers)


if __name__ == "__main__":
    sys.exit(main())
