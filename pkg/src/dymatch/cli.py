"""Command line: ``dymatch {run,bench,lbexp,verify-replay}``.

Configs are flat TOML files.  ``run`` and ``verify-replay`` read the keys of
:class:`dymatch.runner.RunConfig`::

    n = 10
    k = 2
    beta = 1            # tokens per link per round
    seed = 0
    algorithm = "fullydyn"   # or "batchinc"
    workload = "random"      # random | delete-matched | replay
    updates = 100
    p_delete = 0.3
    max_batch = 1
    max_edges = 24           # optional cap on the edge count
    verify = "post"          # off | post | phase

``bench`` reads ``algorithm``, ``sizes`` (m or ell values), ``k``, ``beta``
(lists), ``samples`` and, for batchinc, ``n``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from typing import Any, Dict, List, Optional, TextIO

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .adversary import load_jsonl
from .errors import BadConfig, BadDimensions, DymatchError, InvalidUpdate, VerificationFailed
from .experiments import bench_csv, run_bench, run_lbexp
from .runner import RunConfig, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise BadConfig(f"malformed config {path}: {exc}") from None


def _run_config(args: argparse.Namespace) -> RunConfig:
    data = load_config(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.verify is not None:
        data["verify"] = args.verify
    return RunConfig.from_mapping(data)


def _emit_records(config: RunConfig, out: TextIO, updates=None) -> int:
    try:
        for rec in run(config, updates):
            out.write(json.dumps(rec, sort_keys=True) + "\n")
    except VerificationFailed as exc:
        if exc.record is not None:
            out.write(json.dumps(exc.record, sort_keys=True, default=repr) + "\n")
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DymatchError as exc:
        print(f"run aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_run(args: argparse.Namespace, out: TextIO) -> int:
    return _emit_records(_run_config(args), out)


def cmd_verify_replay(args: argparse.Namespace, out: TextIO) -> int:
    config = _run_config(args)
    try:
        with open(args.updates) as fh:
            updates = load_jsonl(fh.read())
    except (OSError, ValueError, KeyError, InvalidUpdate) as exc:
        raise BadConfig(f"cannot load update sequence {args.updates}: {exc}") from None
    return _emit_records(config, out, updates)


def cmd_bench(args: argparse.Namespace, out: TextIO) -> int:
    grid = load_config(args.config) if args.config else {}
    allowed = {"algorithm", "sizes", "k", "beta", "samples", "n"}
    unknown = sorted(set(grid) - allowed)
    if unknown:
        raise BadConfig(f"unknown bench keys: {', '.join(unknown)}")
    if grid.get("algorithm", "fullydyn") not in ("fullydyn", "batchinc"):
        raise BadConfig("bench algorithm must be fullydyn or batchinc")
    for key in ("sizes", "k", "beta"):
        if key in grid and not isinstance(grid[key], list):
            grid[key] = [grid[key]]
        if not all(isinstance(x, int) and x >= 0 for x in grid.get(key, [])):
            raise BadConfig(f"bench key {key} must hold non-negative integers")
    cells = run_bench(grid, seed=args.seed or 0)
    out.write(bench_csv(cells))
    return EXIT_OK if all(c.max_link_tokens <= c.beta for c in cells) else EXIT_FAIL


def cmd_lbexp(args: argparse.Namespace, out: TextIO) -> int:
    trials = run_lbexp(args.n, args.k, args.ell, args.trials, seed=args.seed or 0)
    ok = True
    for t in trials:
        rec = asdict(t)
        rec["ok"] = t.ok
        ok &= t.ok
        out.write(json.dumps(rec, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dymatch",
        description="Round-accurate simulation of distributed dynamic matching algorithms.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("\n\n", 1)[1],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="-", help="output file (default: stdout)")

    p = sub.add_parser("run", help="run a workload and emit one JSONL record per update")
    common(p)
    p.add_argument("--verify", choices=["off", "post", "phase"], default=None,
                   help="oracle checks: none, after each update, or at every phase boundary")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-replay", help="re-run a serialized update sequence with checks")
    common(p)
    p.add_argument("--updates", required=True, help="JSONL update sequence")
    p.add_argument("--verify", choices=["off", "post", "phase"], default=None)
    p.set_defaults(func=cmd_verify_replay)

    p = sub.add_parser("bench", help="round-scaling grid, CSV output")
    common(p, config_required=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("lbexp", help="bits received by the middle-vertex player in the lower-bound construction")
    common(p, config_required=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_lbexp)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.out == "-":
            return args.func(args, sys.stdout)
        with open(args.out, "w") as out:
            return args.func(args, out)
    except (BadConfig, BadDimensions) as exc:
        print(f"dymatch {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
