#!/usr/bin/env python3
"""Run the terminal-vs-router comparison sweep and write the three CSVs.

Equivalent to `bench scenario1 --sweep ...`; kept as a script for quick
experiment iterations.
"""
from __future__ import annotations

import argparse
import logging

from artifact.bench import Scenario, ScenarioConfig, emit_csv, run_sweep


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sweep", default="10,50,100,200", help="comma-separated N values")
    parser.add_argument("--period-ms", type=int, default=100)
    parser.add_argument("--duration-s", type=float, default=10.0)
    parser.add_argument("--op-work-ms", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = ScenarioConfig(
        scenario=Scenario.TERMINALS,
        period_ms=args.period_ms,
        duration_s=args.duration_s,
        op_work_ms=args.op_work_ms,
        seed=args.seed,
    )
    ns = [int(part) for part in args.sweep.split(",") if part.strip()]
    points = run_sweep(cfg, ns)
    for point in points:
        print(point.scenario1.summary("scenario1"))
        print(point.scenario2.summary("scenario2"))
    for path in emit_csv(points, args.out):
        print(f"wrote {path}")
    ok = all(p.scenario1.conserved and p.scenario2.conserved for p in points)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
