"""Command-line entry point: ``spinboson {run,preset,sweep,convergence}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, NumericalQualityError, SpinBosonError
from .presets import PRESET_NAMES, preset_config
from .scenario import (
    ScenarioConfig,
    format_summary,
    parse_number,
    quality_failed,
    run_scenario,
    run_sweep,
    rwa_convergence,
)

EXIT_OK, EXIT_CONFIG, EXIT_QUALITY = 0, 2, 3


def _load(spec: str) -> ScenarioConfig:
    """A scenario file path, or the name of a built-in preset."""
    if spec in PRESET_NAMES and not Path(spec).exists():
        return preset_config(spec)
    return ScenarioConfig.from_file(spec)


def _apply_flags(cfg: ScenarioConfig, args) -> ScenarioConfig:
    kw = {}
    if getattr(args, "paper_scale", False):
        if cfg.paper_scale is None:
            raise ConfigError("scenario defines no paper_scale")
        kw["scale"] = cfg.paper_scale
    if getattr(args, "scale", None) is not None:
        kw["scale"] = args.scale
    if getattr(args, "dim", None) is not None:
        kw["N"] = args.dim
    if getattr(args, "dt", None) is not None:
        kw["dt"] = args.dt
    return replace(cfg, **kw) if kw else cfg


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinboson", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("config", help="scenario file or preset name")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--dim", type=int, help="Fock truncation N")
        p.add_argument("--dt", type=float, help="integrator step in units of 1/nu")
        p.add_argument("--scale", type=float, help="hierarchy factor nu/nu_tilde")
        p.add_argument("--paper-scale", action="store_true", help="use the scenario's paper_scale (slow)")
        p.add_argument("--workers", type=int, default=1)

    common(sub.add_parser("run", help="evolve one scenario and write its CSV"))
    p = sub.add_parser("preset", help="print the configuration of a built-in scenario")
    p.add_argument("name", choices=PRESET_NAMES)
    p = sub.add_parser("sweep", help="run a scenario over several values of one field")
    common(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p = sub.add_parser("convergence", help="maximum infidelity versus hierarchy factor")
    common(p)
    p.add_argument("--scales", required=True, help="comma-separated ascending scales")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.cmd == "preset":
            sys.stdout.write(preset_config(args.name).to_ini())
            return EXIT_OK
        cfg = _apply_flags(_load(args.config), args)
        if args.cmd == "run":
            res = run_scenario(cfg, workers=args.workers, out=args.out, echo=True)
            return EXIT_QUALITY if quality_failed(res.quality) else EXIT_OK
        if args.cmd == "sweep":
            values = [v for v in args.values.split(",") if v.strip()]
            results, table = run_sweep(cfg, args.axis, values, workers=args.workers, out=args.out)
            for r in results:
                print(format_summary(r.summary()))
            return EXIT_QUALITY if any(quality_failed(r.quality) for r in results) else EXIT_OK
        scales = [parse_number(s) for s in args.scales.split(",") if s.strip()]
        rows, mono = rwa_convergence(cfg, scales, workers=args.workers, out=args.out)
        for r in rows:
            print(f"scale={r['scale']:g} max_infidelity={r['max_infidelity']:.3e} quality={r['quality']}")
        if mono is not None:
            print(f"strictly decreasing: {mono}")
        return EXIT_QUALITY if any(quality_failed(r["quality"]) for r in rows) else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalQualityError as exc:
        print(f"numerical quality failure: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    except SpinBosonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
