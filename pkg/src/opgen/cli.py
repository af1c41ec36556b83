"""``opg``: run scenario configs and figure presets, writing CSV plus a manifest."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .errors import OpgError, SchemaError
from .presets import (RunManifest, config_hash, list_presets, parse_config, preset_config,
                      run_scenario)

EXIT_SCHEMA = 2
EXIT_NUMERIC = 3


def _run_one(args):
    sc, tol, cutoff, out_dir = args
    try:
        text, entry = run_scenario(sc, tol, cutoff)
    except SchemaError as exc:
        return sc.name, None, f"schema: {exc}"
    except (OpgError, ArithmeticError, ValueError) as exc:
        return sc.name, None, f"{type(exc).__name__}: {exc}"
    path = os.path.join(out_dir, f"{sc.name}.csv")
    with open(path, "w", newline="") as fh:
        fh.write(text)
    entry["csv"] = os.path.basename(path)
    return sc.name, entry, None


def execute(data: dict, out_dir: str, tol=None, cutoff=None, parallel=False, stream=None) -> int:
    stream = stream or sys.stderr
    try:
        scenarios = parse_config(data)
    except SchemaError as exc:
        print(f"opg: {exc}", file=stream)
        return EXIT_SCHEMA
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(sc, tol, cutoff, out_dir) for sc in scenarios]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    entries, failures = [], []
    for name, entry, err in results:
        if err is None:
            entries.append(entry)
        else:
            failures.append((name, err))
            entries.append({"scenario": name, "error": err})
    overrides = {"tol": tol, "cutoff": cutoff}
    manifest = RunManifest(config_hash({"config": data, "overrides": overrides}), __version__, entries)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(manifest.to_json())
    for name, err in failures:
        print(f"opg: scenario {name} failed: {err}", file=stream)
    if any(err.startswith("schema:") for _, err in failures):
        return EXIT_SCHEMA
    return EXIT_NUMERIC if failures else 0


def _parser():
    p = argparse.ArgumentParser(prog="opg", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(q):
        q.add_argument("--out", default="opg-out", help="output directory")
        q.add_argument("--tol", type=float, help="quadrature abs/rel tolerance override")
        q.add_argument("--cutoff", type=int, help="fixed Fock cutoff instead of the automatic one")
        q.add_argument("--parallel", action="store_true", help="run scenarios concurrently")

    r = sub.add_parser("run", help="run a JSON config")
    r.add_argument("config")
    common(r)
    pr = sub.add_parser("preset", help="run a built-in preset")
    pr.add_argument("name")
    common(pr)
    sub.add_parser("list", help="list presets")
    sc = sub.add_parser("schema", help="print the config JSON schema")
    del sc
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_presets())
        return 0
    if args.command == "schema":
        from .presets import CONFIG_SCHEMA
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    if args.tol is not None and not args.tol > 0:
        print("opg: --tol must be positive", file=sys.stderr)
        return EXIT_SCHEMA
    if args.cutoff is not None and args.cutoff < 1:
        print("opg: --cutoff must be at least 1", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        if args.command == "preset":
            data = preset_config(args.name)
        else:
            with open(args.config) as fh:
                data = json.load(fh)
    except SchemaError as exc:
        print(f"opg: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"opg: cannot read config: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return execute(data, args.out, args.tol, args.cutoff, args.parallel)


if __name__ == "__main__":
    sys.exit(main())
