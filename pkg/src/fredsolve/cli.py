"""Command line entry point.

    fredsolve solve <config.json> [--out DIR] [--jobs N] [--seed S]

Runs the benchmark described by the config, writes records.csv (and solution
profiles when requested by the config) into the output directory.  Exit
status: 0 when every run converged, 2 when any run failed or diverged, 1 on
a config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import emit_csv, emit_profile, load_config, run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fredsolve")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run a benchmark config")
    solve.add_argument("config", help="path to the JSON experiment config")
    solve.add_argument("--out", default=".", help="output directory")
    solve.add_argument("--jobs", type=int, default=1, help="parallel workers")
    solve.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = type(config)(config.problem, config.grid, config.methods,
                                  config.noise, seed=args.seed)
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    records = run_experiment(config, jobs=max(1, args.jobs))
    os.makedirs(args.out, exist_ok=True)
    emit_csv(records, os.path.join(args.out, "records.csv"))
    if doc.get("emit_profiles"):
        for i, rec in enumerate(records):
            if rec.solution is not None and rec.grid is not None:
                emit_profile(rec.solution, rec.grid,
                             os.path.join(args.out, f"profile_{i:03d}_{rec.method}.csv"))

    for rec in records:
        status = "ok" if rec.converged else "FAILED"
        print(f"{rec.method:18s} delta={rec.delta:.3e} residual={rec.residual:.3e} "
              f"rel_err={rec.rel_solution_error:.3e} [{status}]")
    return 0 if all(r.converged for r in records) else 2


if __name__ == "__main__":
    sys.exit(main())
