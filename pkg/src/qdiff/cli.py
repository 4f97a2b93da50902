"""Command-line entry point: ``qdiff {run,preset,list-presets,validate}``.

The exit code is 0 exactly when every pass flag of every report is true.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigurationError, QdiffError
from .harness import (PRESETS, ExperimentConfig, apply_overrides, emit_report, preset,
                      resolve_out_dir, run_experiment, validate)

EXIT_FAIL = 1
EXIT_ERROR = 2


def _print_report(name, report, paths, stream):
    status = "PASS" if report.passed else "FAIL"
    print(f"[{status}] {name} ({report.wall_clock:.1f}s)", file=stream)
    for m in report.metrics:
        flag = "ok " if m["passed"] else "BAD"
        print(f"    {flag} {m['name']}: {m['value']:.6g} {m['op']} {m['threshold']:.6g}"
              f"  ({m['tolerance_key']})", file=stream)
    for p in paths:
        print(f"    wrote {p}", file=stream)


def _run_one(cfg: ExperimentConfig, out, fmt, stream) -> bool:
    out_dir = resolve_out_dir(cfg, out)
    report = run_experiment(cfg, out_dir)
    paths = emit_report(report, out_dir, fmt)
    _print_report(cfg.name or cfg.kind, report, paths, stream)
    return report.passed


def _load(path, overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from None
    data = apply_overrides(data, overrides)
    data.setdefault("name", Path(path).stem)
    return ExperimentConfig.from_dict(data)


def _preset_configs(names, seed, overrides):
    out = []
    for name in names:
        cfg = preset(name, seed)
        out.append(ExperimentConfig.from_dict(apply_overrides(cfg.to_dict(), overrides)))
    return out


def _sub_out(out, cfg, many):
    if out is None:
        return None
    return str(Path(out) / cfg.name) if many else out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdiff", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory (beats QDIFF_OUT and the config)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key by dotted path; VALUE is parsed as JSON")
        p.add_argument("--format", choices=("json", "csv-summary", "both"), default="json")

    run = sub.add_parser("run", help="run a JSON config, or 'all-presets'")
    run.add_argument("config")
    common(run)
    pre = sub.add_parser("preset", help="run a named preset, or 'all'")
    pre.add_argument("name")
    pre.add_argument("--seed", type=int)
    common(pre)
    sub.add_parser("list-presets", help="print the preset names and kinds")
    val = sub.add_parser("validate", help="check a JSON config without running it")
    val.add_argument("config")
    val.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    stream = sys.stdout
    try:
        if args.command == "list-presets":
            for name in PRESETS:
                print(f"{name}\t{PRESETS[name]['kind']}", file=stream)
            return 0
        if args.command == "validate":
            cfg = _load(args.config, args.set)
            errs = validate(cfg)
            for e in errs:
                print(f"error: {e}", file=sys.stderr)
            if not errs:
                print(f"{args.config}: ok", file=stream)
            return EXIT_FAIL if errs else 0
        if args.command == "run" and args.config == "all-presets":
            cfgs = _preset_configs(list(PRESETS), None, args.set)
        elif args.command == "run":
            cfgs = [_load(args.config, args.set)]
        elif args.name == "all":
            cfgs = _preset_configs(list(PRESETS), args.seed, args.set)
        else:
            cfgs = _preset_configs([args.name], args.seed, args.set)
        many = len(cfgs) > 1
        ok = True
        for cfg in cfgs:
            ok &= _run_one(cfg, _sub_out(args.out, cfg, many), args.format, stream)
        return 0 if ok else EXIT_FAIL
    except QdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
