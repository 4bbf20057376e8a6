"""Command-line entry point.

Verbs:
  run       one experiment (trace or synthetic pattern, one engine)
  compare   meta-prefetcher vs each standalone component vs no-prefetch vs
            a best-per-trace oracle, over a trace list from a config file
  overhead  print the hardware-overhead accounting
  gen       write a synthetic trace file
"""

import argparse
import json
import sys

from .harness import (
    ENGINE_NAMES,
    cache_config_from_dict,
    compare_engines,
    experiment_from_dict,
    run_experiment,
)
from .metrics import emit_report, overhead, overhead_for_test_case, COMPONENT_COSTS_KB
from .traces import PatternSpec, generate, write_trace


def parse_pattern_arg(text: str) -> PatternSpec:
    """Parse --pattern: inline JSON, or 'kind[:key=value,...]' shorthand."""
    text = text.strip()
    if text.startswith("{"):
        return PatternSpec.from_dict(json.loads(text))
    kind, _, rest = text.partition(":")
    params: dict = {"kind": kind}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"bad pattern parameter: {item!r}")
            try:
                params[key] = int(value, 0)
            except ValueError:
                try:
                    params[key] = float(value)
                except ValueError:
                    params[key] = value
    return PatternSpec.from_dict(params)


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _open_sink(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _emit(report: dict, fmt: str, out_path) -> None:
    sink, owned = _open_sink(out_path)
    try:
        emit_report(report, fmt, sink)
    finally:
        if owned:
            sink.close()


def cmd_run(args) -> int:
    data = _load_config(args.config) if args.config else {}
    if args.trace:
        data["trace_file"] = args.trace
        data.pop("pattern", None)
    if args.pattern:
        data["pattern"] = parse_pattern_arg(args.pattern).to_dict()
        data.pop("trace_file", None)
    if args.engine:
        data["engine"] = args.engine
    if args.length is not None:
        data["length"] = args.length
    if args.seed is not None:
        data["seed"] = args.seed
    out = args.out if args.out is not None else data.get("out")
    fmt = args.format if args.format is not None else data.get("format", "json")
    cfg = experiment_from_dict(data)
    report = run_experiment(cfg)
    _emit(report, fmt, out)
    return 0


_COMPARE_FIELDS = {"policy", "traces", "cache", "arsenal", "component_params",
                   "seed", "out", "format"}


def cmd_compare(args) -> int:
    data = _load_config(args.config)
    unknown = set(data) - _COMPARE_FIELDS
    if unknown:
        raise ValueError(f"unknown compare fields: {sorted(unknown)}")
    if "traces" not in data:
        raise ValueError("compare configuration requires a traces list")
    seed = args.seed if args.seed is not None else int(data.get("seed", 0))
    out = args.out if args.out is not None else data.get("out")
    fmt = args.format if args.format is not None else data.get("format", "json")
    report = compare_engines(
        traces=data["traces"],
        policy=data.get("policy", "tc2"),
        cache=cache_config_from_dict(data.get("cache")),
        arsenal=data.get("arsenal"),
        component_params=data.get("component_params"),
        seed=seed,
    )
    _emit(report, fmt, out)
    return 0


def cmd_overhead(args) -> int:
    if args.test_case:
        report = overhead_for_test_case(args.test_case, args.capacity, args.fpp)
    else:
        report = overhead(args.components, args.capacity, args.fpp)
    _emit(report, "json", args.out)
    return 0


def cmd_gen(args) -> int:
    spec = parse_pattern_arg(args.pattern)
    if args.seed is not None:
        spec = PatternSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    sink, owned = _open_sink(args.out)
    try:
        write_trace(generate(spec, args.length), sink)
    finally:
        if owned:
            sink.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arsenal-sim",
        description="Trace-driven cache and prefetcher-selection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", help="experiment configuration file (JSON)")
    run.add_argument("--trace", help="trace file (PC ADDR R|W per line)")
    run.add_argument("--pattern", help="synthetic pattern (JSON or kind[:k=v,...])")
    run.add_argument("--engine", choices=ENGINE_NAMES)
    run.add_argument("--length", type=int, help="synthetic trace length")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output path (default stdout)")
    run.add_argument("--format", choices=("json", "csv"))
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="compare engines over a trace list")
    cmp_.add_argument("--config", required=True,
                      help="compare configuration file (JSON)")
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--out")
    cmp_.add_argument("--format", choices=("json", "csv"))
    cmp_.set_defaults(func=cmd_compare)

    ovh = sub.add_parser("overhead", help="print hardware-overhead accounting")
    ovh.add_argument("--test-case", choices=tuple(COMPONENT_COSTS_KB),
                     help="use a predefined component roster and its costs")
    ovh.add_argument("--components", type=int, default=1,
                     help="component count when no test case is given")
    ovh.add_argument("--capacity", type=int, default=2000)
    ovh.add_argument("--fpp", type=float, default=0.01)
    ovh.add_argument("--out")
    ovh.set_defaults(func=cmd_overhead)

    gen = sub.add_parser("gen", help="write a synthetic trace file")
    gen.add_argument("--pattern", required=True)
    gen.add_argument("--length", type=int, required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"arsenal-sim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
