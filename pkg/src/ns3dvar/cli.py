"""Command-line entry point: run presets, validate configs, print bounds.

Exit codes: 0 success, 2 validation failure, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis
from .dynamics import DivergedStepError
from .experiments import (
    PRESET_NAMES,
    ExperimentConfig,
    Seeds,
    config_from_json,
    preset,
    run_experiment,
    validate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGED = 3


def _load_config(spec: str) -> ExperimentConfig:
    """Resolve a preset name or a JSON config path into a config."""
    if spec in PRESET_NAMES:
        return preset(spec)
    path = Path(spec)
    if path.exists():
        return config_from_json(path)
    raise ValueError(
        f"{spec!r} is neither a preset ({', '.join(PRESET_NAMES)}) "
        f"nor an existing config file")


def _apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply `key=value` overrides; dotted keys reach nse./filter./seeds. fields."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        head, dot, tail = key.partition(".")
        if dot:
            sub = getattr(cfg, head)
            if not hasattr(sub, tail):
                raise ValueError(f"unknown override field {key!r}")
            cfg = replace(cfg, **{head: replace(sub, **{tail: value})})
        else:
            if not hasattr(cfg, head):
                raise ValueError(f"unknown override field {key!r}")
            if head in ("start_times", "h_list"):
                value = tuple(value)
            cfg = replace(cfg, **{head: value})
    return cfg


def _cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seeds=Seeds(signal=args.seed, noise=args.seed + 1,
                                           ic=args.seed + 2))
        cfg = _apply_overrides(cfg, args.overrides)
    except (ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    violations = validate(cfg)
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    out_dir = args.out or f"runs/{cfg.name}"
    try:
        out = run_experiment(cfg, out_dir)
    except DivergedStepError as err:
        print(f"diverged: solution blew up at t={err.t:.4g}; "
              f"partial outputs in {out_dir}", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    violations = validate(cfg)
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        rep = analysis.bound_report(cfg.filter, cfg.nse.delta)
    except analysis.DivergentTraceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    print(json.dumps(rep.as_dict(), indent=2))
    return EXIT_OK


def _cmd_list_presets(_args) -> int:
    for name in PRESET_NAMES:
        cfg = preset(name)
        p = cfg.filter
        print(f"{name:20s} kind={cfg.kind:28s} omega={p.omega:g} "
              f"sigma0={p.sigma0:g} zeta={p.zeta:g} beta={p.beta:g} T={cfg.T:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ns3dvar",
        description="3DVAR filtering experiments for 2D Navier-Stokes")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a JSON config")
    run.add_argument("config", help="preset name or path to config.json")
    run.add_argument("--out", help="output directory (default runs/<name>)")
    run.add_argument("--seed", type=int,
                     help="base seed; signal/noise/ic use S, S+1, S+2")
    run.add_argument("--overrides", nargs="*", default=[], metavar="K=V",
                     help="field overrides, e.g. T=20 filter.omega=30 nse.nu=0.005")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config against all gates")
    val.add_argument("config")
    val.set_defaults(func=_cmd_validate)

    bounds = sub.add_parser("bounds", help="print accuracy/stability bounds")
    bounds.add_argument("config")
    bounds.set_defaults(func=_cmd_bounds)

    lp = sub.add_parser("list-presets", help="list the named presets")
    lp.set_defaults(func=_cmd_list_presets)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
